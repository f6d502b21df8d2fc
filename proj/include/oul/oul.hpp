#pragma once

#include "oul/core/entropy.hpp"
#include "oul/core/error.hpp"
#include "oul/core/pfm.hpp"
#include "oul/core/pgm.hpp"
#include "oul/core/raster.hpp"
#include "oul/core/rng.hpp"
#include "oul/fusion/fusion.hpp"
#include "oul/fusion/staple.hpp"
#include "oul/fusion/target.hpp"
#include "oul/harness/config.hpp"
#include "oul/harness/experiment.hpp"
#include "oul/harness/split.hpp"
#include "oul/metrics/metrics.hpp"
#include "oul/nn/adam.hpp"
#include "oul/nn/checkpoint.hpp"
#include "oul/nn/grad_check.hpp"
#include "oul/nn/io.hpp"
#include "oul/nn/layers.hpp"
#include "oul/nn/mc.hpp"
#include "oul/nn/tensor.hpp"
#include "oul/nn/train.hpp"
#include "oul/nn/unet.hpp"
#include "oul/synthgen/dataset.hpp"
#include "oul/synthgen/params.hpp"
#include "oul/synthgen/render.hpp"
#include "oul/synthgen/shape.hpp"
