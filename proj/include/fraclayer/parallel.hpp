#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fraclayer {

/// Process-wide worker count used by assembly and multi-start loops.
void set_workers(int n);
int workers();

/// Runs body(b) for every block b in [0, n_blocks). Blocks are handed out
/// statically, so the set of blocks is independent of the worker count;
/// callers reduce per-block results in block order.
void parallel_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& body);

/// Sum of f(i) for i in [0, n), reduced in fixed blocks of `block` indices.
/// Bitwise identical for any worker count.
double blocked_sum(std::size_t n, std::size_t block, const std::function<double(std::size_t)>& f);

}  // namespace fraclayer
