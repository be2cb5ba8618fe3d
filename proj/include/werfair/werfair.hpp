// include/werfair/werfair.hpp

// Copyright 2026  The werfair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WERFAIR_WERFAIR_HPP_
#define WERFAIR_WERFAIR_HPP_

#include "werfair/alignment.hpp"
#include "werfair/dataset.hpp"
#include "werfair/design.hpp"
#include "werfair/errors.hpp"
#include "werfair/glm.hpp"
#include "werfair/glmm.hpp"
#include "werfair/inference.hpp"
#include "werfair/optim.hpp"
#include "werfair/parallel.hpp"
#include "werfair/quadrature.hpp"
#include "werfair/random.hpp"
#include "werfair/report.hpp"
#include "werfair/simulation.hpp"

#endif  // WERFAIR_WERFAIR_HPP_
