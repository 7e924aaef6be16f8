#pragma once

// Umbrella header.

#include "gswe/autodiff.hpp"
#include "gswe/checkpoint.hpp"
#include "gswe/dataset.hpp"
#include "gswe/embedding.hpp"
#include "gswe/errors.hpp"
#include "gswe/eval.hpp"
#include "gswe/gsw.hpp"
#include "gswe/model.hpp"
#include "gswe/optim.hpp"
#include "gswe/pointset.hpp"
#include "gswe/rng.hpp"
#include "gswe/slicers.hpp"
#include "gswe/ssl.hpp"
#include "gswe/tensor.hpp"
#include "gswe/transport1d.hpp"
