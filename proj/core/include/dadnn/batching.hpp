#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dadnn/instance.hpp"

namespace dadnn::synth {

/// One epoch of proportionally populated mini-batches, as row indices into
/// `train`. Each batch takes round(batch_size * N_k / N) rows of scene k
/// (largest-remainder corrected to sum to batch_size) while every scene can
/// fill its quota; the tail is apportioned by what remains and the final
/// batch may be partial. Within-scene order is reshuffled per (seed, epoch).
std::vector<std::vector<std::size_t>> compose_batches(std::span<const Instance> train,
                                                      std::size_t batch_size, std::uint64_t seed,
                                                      std::size_t epoch = 0);

}  // namespace dadnn::synth
