#include "drift/checkpoint.hpp"

#include "drift/fmtio.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace drift {

namespace {

double parse_value(const std::string& token) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw std::runtime_error("checkpoint: bad numeric value \"" + token + "\"");
  }
  return value;
}

std::string expect_line(std::istringstream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(std::string("checkpoint: truncated, expected ") + what);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "drift-checkpoint v" << kCheckpointVersion << '\n';
  out << "arch " << (ckpt.clf.arch.kind == ArchKind::Linear ? "linear" : "mlp") << ' '
      << ckpt.clf.arch.input_dim << ' ' << ckpt.clf.arch.hidden_dim << ' '
      << format_double(ckpt.clf.arch.dropout_rate) << '\n';
  out << "extractor " << ckpt.extractor << '\n';
  out << "vocab_hash " << ckpt.vocab_hash << '\n';
  out << "params " << ckpt.clf.params.size() << '\n';
  for (Eigen::Index i = 0; i < ckpt.clf.params.size(); ++i) {
    out << format_double(ckpt.clf.params(i)) << '\n';
  }
  out << "embedding " << ckpt.table.rows() << ' ' << ckpt.table.dim() << ' '
      << (ckpt.table.trainable ? 1 : 0) << '\n';
  for (int r = 0; r < ckpt.table.rows(); ++r) {
    for (int c = 0; c < ckpt.table.dim(); ++c) {
      if (c) out << ' ';
      out << format_double(ckpt.table.weights(r, c));
    }
    out << '\n';
  }
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  Checkpoint ckpt;

  const std::string magic = expect_line(in, "header");
  if (magic != "drift-checkpoint v1") {
    throw std::runtime_error("checkpoint: unsupported format \"" + magic + "\"");
  }

  auto arch_fields = split_ws(expect_line(in, "arch"));
  if (arch_fields.size() != 5 || arch_fields[0] != "arch") {
    throw std::runtime_error("checkpoint: malformed arch line");
  }
  if (arch_fields[1] == "linear") {
    ckpt.clf.arch.kind = ArchKind::Linear;
  } else if (arch_fields[1] == "mlp") {
    ckpt.clf.arch.kind = ArchKind::Mlp;
  } else {
    throw std::runtime_error("checkpoint: unknown architecture \"" + arch_fields[1] + "\"");
  }
  ckpt.clf.arch.input_dim = std::stoi(arch_fields[2]);
  ckpt.clf.arch.hidden_dim = std::stoi(arch_fields[3]);
  ckpt.clf.arch.dropout_rate = parse_value(arch_fields[4]);

  auto extractor_fields = split_ws(expect_line(in, "extractor"));
  if (extractor_fields.size() != 2 || extractor_fields[0] != "extractor") {
    throw std::runtime_error("checkpoint: malformed extractor line");
  }
  ckpt.extractor = extractor_fields[1];

  auto hash_fields = split_ws(expect_line(in, "vocab_hash"));
  if (hash_fields.size() != 2 || hash_fields[0] != "vocab_hash") {
    throw std::runtime_error("checkpoint: malformed vocab_hash line");
  }
  ckpt.vocab_hash = std::stoull(hash_fields[1]);

  auto params_fields = split_ws(expect_line(in, "params"));
  if (params_fields.size() != 2 || params_fields[0] != "params") {
    throw std::runtime_error("checkpoint: malformed params line");
  }
  const long n_params = std::stol(params_fields[1]);
  if (n_params != param_count(ckpt.clf.arch)) {
    throw std::runtime_error("checkpoint: parameter count does not match architecture layout");
  }
  ckpt.clf.params.resize(n_params);
  for (long i = 0; i < n_params; ++i) {
    ckpt.clf.params(i) = parse_value(expect_line(in, "parameter value"));
  }

  auto emb_fields = split_ws(expect_line(in, "embedding"));
  if (emb_fields.size() != 4 || emb_fields[0] != "embedding") {
    throw std::runtime_error("checkpoint: malformed embedding line");
  }
  const int rows = std::stoi(emb_fields[1]);
  const int cols = std::stoi(emb_fields[2]);
  ckpt.table.trainable = emb_fields[3] == "1";
  ckpt.table.weights.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    auto values = split_ws(expect_line(in, "embedding row"));
    if (static_cast<int>(values.size()) != cols) {
      throw std::runtime_error("checkpoint: embedding row " + std::to_string(r) +
                               " has wrong width");
    }
    for (int c = 0; c < cols; ++c) ckpt.table.weights(r, c) = parse_value(values[static_cast<std::size_t>(c)]);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace drift
