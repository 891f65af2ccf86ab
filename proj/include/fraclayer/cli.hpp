#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclayer/funcrep.hpp"

namespace fraclayer {

/// Validated run configuration. `params` holds typed values (numbers, lists,
/// strings) for every key the subcommand accepts, defaults filled in.
struct RunConfig {
    std::string subcommand;
    nlohmann::json params = nlohmann::json::object();

    double real(const std::string& key) const;
    int integer(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    Interval interval(const std::string& key) const;

    /// Effective values without `workers`, so reports do not depend on it.
    nlohmann::json echo() const;
};

std::vector<std::string> subcommands();

/// `[subcommand]` header plus `key = value` lines; `#` starts a comment.
/// Overrides are `key=value` strings applied after the file.
/// Throws ParseError (with line number) or RangeError (key and interval).
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Exterior/boundary datum: a number, `sign`, or `sign(x-a)` / `sign(x+a)`.
std::function<double(double)> parse_datum(const std::string& spec);

/// Runs the subcommand and writes its artifacts into params["out"]. Returns
/// 0 on success, 2 on NotConverged, 3 on any other error; errors are also
/// written to error.json.
int run(const RunConfig& cfg);

/// Replaces non-finite numbers by null so emitted JSON parses back equal.
nlohmann::json finite_json(const nlohmann::json& j);

}  // namespace fraclayer
