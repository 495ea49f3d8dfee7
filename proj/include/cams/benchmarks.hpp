#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cams/datagen.hpp"

namespace cams {

// Desk-scale synthetic benchmarks.

// c=3, k=5, n=6: three class experts, two generalists, one dominant normal
// policy plus biased, weak normal, random and malicious policies.
SyntheticSpec standard_benchmark(std::size_t rounds = 4000);

// c=3, k=4: only malicious and random base policies; model 0 is clearly best.
SyntheticSpec malicious_benchmark(std::size_t rounds = 2000);

// c=6, k=6 class experts with a mixed policy set, for query-rule ablations.
SyntheticSpec ablation_benchmark(std::size_t rounds = 2000);

// c=3, k=5, no base policies.
SyntheticSpec context_free_benchmark(std::size_t rounds = 2000);

// c=3, k=6, n=17 with 11 malicious or random policies.
SyntheticSpec vertebral_benchmark(std::size_t rounds = 300);

// Two equal segments, dominant model 0 then 1; c=3, k=4, n=4.
SyntheticSpec adversarial_benchmark(std::size_t rounds = 1000);

const std::vector<std::string>& preset_names();
// Throws ValidationError for unknown names.
SyntheticSpec preset(std::string_view name, std::size_t rounds = 0);

}  // namespace cams
