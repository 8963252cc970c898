#pragma once

#include "rdlab/cli.hpp"
#include "rdlab/errors.hpp"
#include "rdlab/grid.hpp"
#include "rdlab/io.hpp"
#include "rdlab/kinetics.hpp"
#include "rdlab/masks.hpp"
#include "rdlab/parallel.hpp"
#include "rdlab/simulate.hpp"
#include "rdlab/stability.hpp"
#include "rdlab/stationary.hpp"
