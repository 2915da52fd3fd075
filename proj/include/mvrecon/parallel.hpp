// Copyright Contributors to the mvrecon Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <functional>

namespace mvr {

/// Number of worker threads used by parallel_for. Defaults to hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Splits [begin, end) into contiguous chunks and runs fn(chunk_begin, chunk_end) on
/// the worker threads. Chunk boundaries depend only on the range and grain, never on
/// the thread count, so callers that write chunk-local results get identical output
/// for any number of threads.
void parallel_for(std::size_t begin, std::size_t end, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace mvr
