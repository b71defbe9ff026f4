#pragma once

#include "drift/featurize.hpp"
#include "drift/netcore.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace drift {

/// Versioned text document holding a trained model: architecture, extractor
/// id, vocabulary hash, flat parameters and the embedding table. Values are
/// written in shortest round-trip decimal form, so reloaded models reproduce
/// eval-mode logits exactly.
struct Checkpoint {
  Classifier clf;
  EmbeddingTable table;
  std::string extractor;
  std::uint64_t vocab_hash = 0;
};

inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace drift
