#pragma once

#include "tensorkit/decompositions.hpp"
#include "tensorkit/errors.hpp"
#include "tensorkit/forms.hpp"
#include "tensorkit/fusion.hpp"
#include "tensorkit/gaussian.hpp"
#include "tensorkit/io.hpp"
#include "tensorkit/learning.hpp"
#include "tensorkit/linalg.hpp"
#include "tensorkit/products.hpp"
#include "tensorkit/rng.hpp"
#include "tensorkit/tensor.hpp"
