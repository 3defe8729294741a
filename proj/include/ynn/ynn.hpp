#pragma once

#include "ynn/backward.hpp"
#include "ynn/config.hpp"
#include "ynn/data.hpp"
#include "ynn/error.hpp"
#include "ynn/experiment.hpp"
#include "ynn/forward.hpp"
#include "ynn/model.hpp"
#include "ynn/numerics.hpp"
#include "ynn/partition.hpp"
#include "ynn/pixmap.hpp"
#include "ynn/random_network.hpp"
#include "ynn/rng.hpp"
#include "ynn/serialize.hpp"
#include "ynn/training.hpp"
