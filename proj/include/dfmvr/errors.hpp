/*
 * dfmvr - multi-view 3D face reconstruction toolkit.
 *
 * File: include/dfmvr/errors.hpp
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

#ifndef DFMVR_ERRORS_HPP
#define DFMVR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dfmvr {

/// Dimension mismatch or an argument outside its documented domain.
class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A vertex landed at or behind the near plane of the camera.
class BehindCameraError : public std::runtime_error
{
public:
    BehindCameraError(int vertex, double depth, double near)
        : std::runtime_error("vertex " + std::to_string(vertex) + " has camera depth " + std::to_string(depth) +
                             " <= near plane " + std::to_string(near)),
          vertex(vertex){};

    int vertex;
};

/// The rendered face and the original face mask do not overlap in some view.
class EmptyOverlapError : public std::runtime_error
{
public:
    explicit EmptyOverlapError(int view)
        : std::runtime_error("rendered face and original mask do not overlap in view " + std::to_string(view)),
          view(view){};

    int view;
};

class DegenerateConfigurationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class EmptyCropError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvalidMeshError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class BadInitializationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A loss term produced a NaN or infinite value or gradient.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace dfmvr

#endif // DFMVR_ERRORS_HPP
