#pragma once

#include <pista/array_io.hpp>
#include <pista/checkpoint.hpp>
#include <pista/dataset.hpp>
#include <pista/frame.hpp>
#include <pista/metrics.hpp>
#include <pista/network.hpp>
#include <pista/numerics.hpp>
#include <pista/sense.hpp>
#include <pista/simulate.hpp>
#include <pista/solver.hpp>
#include <pista/training.hpp>
