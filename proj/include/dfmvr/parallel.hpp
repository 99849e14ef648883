/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/parallel.hpp
 *
 * Copyright 2026 The dfmvr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef DFMVR_PARALLEL_HPP
#define DFMVR_PARALLEL_HPP

#include <functional>

namespace dfmvr {

/**
 * Number of worker threads used by the parallel kernels.
 *
 * Reads the DFMVR_THREADS environment variable on every call; falls back to
 * std::thread::hardware_concurrency(). Always at least 1.
 */
int worker_count();

/**
 * Runs task(i) for every i in [0, num_tasks).
 *
 * Tasks are distributed round-robin over at most worker_count() threads. Callers
 * that need deterministic results must make every task write to storage owned by
 * that task alone and reduce afterwards in index order. The first exception thrown
 * by any task is rethrown on the calling thread.
 */
void parallel_for(int num_tasks, const std::function<void(int)>& task);

} // namespace dfmvr

#endif // DFMVR_PARALLEL_HPP
