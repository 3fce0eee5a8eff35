// checkpoint.hpp
// versioned binary snapshot of a trained model: architecture, every weight
// tensor, per-sequence intentions with labels, the epoch log and the seed.
// Round trips are bit exact.

#pragma once

#include <cstdint>
#include <string>

#include "pmstrnn/training.hpp"

namespace pmstrnn {

void save_checkpoint(const std::string& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::string& path);

// crc over the serialized weight tensors, for frozen-parameter assertions
std::uint32_t params_checksum(const ArchitectureSpec& arch, const NetworkParams& p);

}  // namespace pmstrnn
