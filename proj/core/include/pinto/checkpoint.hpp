#pragma once
// Versioned binary checkpoint container: a config echo, named parameter
// matrices, optional optimizer moments, and an optional trainer cursor
// (epoch, global step, shuffle rng words) for exact resume. Integers and
// IEEE-754 doubles are stored little-endian, matrices row-major; the byte
// layout is documented in docs/checkpoint-format.md. Round trips are
// bit-exact.

#include <pinto/optimizer.hpp>
#include <pinto/parameter_store.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace pinto {

struct TrainerState {
  std::int64_t next_epoch = 0;   // epochs already completed
  std::int64_t global_step = 0;  // optimizer steps already taken
  std::array<std::uint64_t, 4> shuffle_rng{};
};

struct Checkpoint {
  std::string config_echo;  // resolved key=value lines
  ParameterStore params;
  std::optional<OptimizerState> opt;
  std::optional<TrainerState> trainer;
};

void write_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace pinto
