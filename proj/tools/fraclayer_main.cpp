#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fraclayer/cli.hpp"
#include "fraclayer/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fractional Allen-Cahn layer and expansion toolkit"};
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("config", config_path, "config file: [subcommand] header plus key = value lines")->required();
    app.add_option("--set", overrides, "override a key, key=value (repeatable)");
    CLI11_PARSE(app, argc, argv);

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot read " << config_path << '\n';
        return 3;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    fraclayer::RunConfig cfg;
    try {
        cfg = fraclayer::parse_config(ss.str(), overrides);
    } catch (const fraclayer::Error& e) {
        std::cerr << e.kind() << ": " << e.what() << '\n';
        return 3;
    }
    const int code = fraclayer::run(cfg);
    if (code != 0) std::cerr << "failed with exit code " << code << "; see " << cfg.text("out") << "/error.json\n";
    return code;
}
