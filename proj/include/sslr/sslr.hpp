/*
   Copyright 2026 The sslr Authors

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

#include "sslr/covariance.hpp"
#include "sslr/dataset.hpp"
#include "sslr/error.hpp"
#include "sslr/linalg.hpp"
#include "sslr/linreg.hpp"
#include "sslr/parallel.hpp"
#include "sslr/risk.hpp"
#include "sslr/rng.hpp"
#include "sslr/simlab.hpp"
#include "sslr/ssl_estimators.hpp"
#include "sslr/variance.hpp"
