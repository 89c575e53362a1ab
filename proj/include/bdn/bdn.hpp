#pragma once

// Umbrella header for the whole library.

#include "bdn/arch.hpp"
#include "bdn/augment.hpp"
#include "bdn/bradley_terry.hpp"
#include "bdn/checkpoint.hpp"
#include "bdn/color.hpp"
#include "bdn/config.hpp"
#include "bdn/conv.hpp"
#include "bdn/data.hpp"
#include "bdn/gradcheck.hpp"
#include "bdn/image.hpp"
#include "bdn/image_io.hpp"
#include "bdn/losses.hpp"
#include "bdn/metrics.hpp"
#include "bdn/model.hpp"
#include "bdn/net.hpp"
#include "bdn/ops.hpp"
#include "bdn/optim.hpp"
#include "bdn/rating.hpp"
#include "bdn/rng.hpp"
#include "bdn/tensor.hpp"
#include "bdn/train.hpp"
