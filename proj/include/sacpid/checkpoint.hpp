#pragma once
#include <string>

#include "sacpid/sac.hpp"

namespace sacpid::ckpt {

// Binary container, magic "SACPID01".  Networks in order actor, critic1,
// critic2, value, target_value: u32 layer count, then per layer u32 in/out
// dims followed by the weight matrix (row-major) and bias vector as
// little-endian 64-bit floats.  Then the four Adam states (actor, critic1,
// critic2, value): u64 step count, then per layer first-moment w/b pairs,
// then second-moment w/b pairs, shapes taken from the matching network.
inline constexpr char kMagic[8] = {'S', 'A', 'C', 'P', 'I', 'D', '0', '1'};

void save(const std::string& path, const sac::Agent& agent);

// Fills an agent whose networks were built with the same sizes; throws
// std::runtime_error mentioning "version mismatch", "corrupt", or the
// offending shapes for the three failure classes.
void load(const std::string& path, sac::Agent& agent);

}  // namespace sacpid::ckpt
