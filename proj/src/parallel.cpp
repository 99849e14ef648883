/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: src/parallel.cpp
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
#include "dfmvr/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dfmvr {

int worker_count()
{
    if (const char* env = std::getenv("DFMVR_THREADS"); env != nullptr && *env != '\0')
    {
        try
        {
            const int n = std::stoi(env);
            if (n >= 1)
            {
                return n;
            }
        } catch (const std::exception&)
        {
            // ignore malformed values
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int num_tasks, const std::function<void(int)>& task)
{
    if (num_tasks <= 0)
    {
        return;
    }
    const int workers = std::min(worker_count(), num_tasks);
    if (workers == 1)
    {
        for (int i = 0; i < num_tasks; ++i)
        {
            task(i);
        }
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w)
    {
        threads.emplace_back([&, w] {
            for (int i = w; i < num_tasks; i += workers)
            {
                try
                {
                    task(i);
                } catch (...)
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error)
                    {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : threads)
    {
        t.join();
    }
    if (first_error)
    {
        std::rethrow_exception(first_error);
    }
}

} // namespace dfmvr
