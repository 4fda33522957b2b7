/*
   Copyright 2026 The crfdma Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "crfdma/bandwidth.hpp"
#include "crfdma/dual_outer.hpp"
#include "crfdma/experiment.hpp"
#include "crfdma/fading.hpp"
#include "crfdma/montecarlo.hpp"
#include "crfdma/oracle.hpp"
#include "crfdma/rate.hpp"
#include "crfdma/rng.hpp"
#include "crfdma/state_solvers.hpp"
#include "crfdma/types.hpp"
#include "crfdma/verify.hpp"
