#pragma once

#include <pista/sense.hpp>

namespace pista {

/// One training / test example: fully sampled truth plus its simulated acquisition.
struct Sample {
    ComplexImage truth;
    CoilSensitivities coils;
    SamplingMask mask;
    MultiCoilKSpace kspace;
};

} // namespace pista
