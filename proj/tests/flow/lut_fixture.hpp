#pragma once

#include "flowscribe/flow/lut.hpp"

namespace fixtures {

inline const flowscribe::flow::FlowLUT& default_lut() {
    static const auto lut = flowscribe::flow::generate_synthetic_lut({});
    return lut;
}

}  // namespace fixtures
