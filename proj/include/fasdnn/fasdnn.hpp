#pragma once

#include "fasdnn/config.hpp"
#include "fasdnn/data.hpp"
#include "fasdnn/errors.hpp"
#include "fasdnn/experiment.hpp"
#include "fasdnn/io.hpp"
#include "fasdnn/layers.hpp"
#include "fasdnn/loss.hpp"
#include "fasdnn/network.hpp"
#include "fasdnn/numeric.hpp"
#include "fasdnn/train.hpp"
