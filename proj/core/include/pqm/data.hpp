#pragma once

#include <vector>

namespace pqm {

/// One synthetic utterance: a token sequence and its class label.
struct Utterance {
    std::vector<int> tokens;
    int label = 0;
};

}  // namespace pqm
