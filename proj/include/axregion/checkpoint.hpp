#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "axregion/features.hpp"
#include "axregion/model.hpp"

namespace axregion {

// Layout:
//   8 bytes   magic "AXRGCKPT"
//   u32 LE    format version
//   u64 LE    header length N
//   N bytes   JSON header: vocabulary hash/size, tau, metadata, and the
//             tensor table (name, rows, cols) in storage order
//   payload   every tensor as f64 LE, column-major, in table order
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string serialize_checkpoint(const DecompositionModel& model,
                                 const RoleVocabulary& vocab = RoleVocabulary::builtin());
// Throws CheckpointError on a malformed file and ShapeMismatch when tensor
// shapes or the vocabulary hash disagree with this build.
DecompositionModel deserialize_checkpoint(std::string_view bytes,
                                          const RoleVocabulary& vocab = RoleVocabulary::builtin());

void save_checkpoint(const DecompositionModel& model, const std::string& path,
                     const RoleVocabulary& vocab = RoleVocabulary::builtin());
DecompositionModel load_checkpoint(const std::string& path,
                                   const RoleVocabulary& vocab = RoleVocabulary::builtin());

}  // namespace axregion
