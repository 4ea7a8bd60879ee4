// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "sgf/errors.hpp"
#include "sgf/io.hpp"
#include "sgf/trainer.hpp"

namespace sgf {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;

void read_tensor(std::istream& in, std::span<double> values) {
  if (!detail::read_doubles(in, values)) throw CorruptCheckpoint("checkpoint: truncated tensor data");
}

double read_scalar(std::istream& in) {
  double v = 0.0;
  if (!detail::read_le(in, v)) throw CorruptCheckpoint("checkpoint: truncated tensor data");
  return v;
}

}  // namespace

nlohmann::json to_json(const ArchConfig& arch) {
  return {{"d", arch.latent_dim},
          {"n_c", arch.cond_dim},
          {"n_blocks", arch.n_blocks},
          {"hidden", arch.hidden},
          {"leaky_slope", arch.leaky_slope},
          {"adain_eps", arch.adain_eps}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig arch;
  arch.latent_dim = j.at("d").get<std::size_t>();
  arch.cond_dim = j.at("n_c").get<std::size_t>();
  arch.n_blocks = j.at("n_blocks").get<std::size_t>();
  arch.hidden = j.at("hidden").get<std::size_t>();
  arch.leaky_slope = j.at("leaky_slope").get<double>();
  arch.adain_eps = j.at("adain_eps").get<double>();
  return arch;
}

void save_checkpoint(const AuxMap& f, const nlohmann::json& meta, const std::filesystem::path& path) {
  const std::string header = nlohmann::json{{"arch", to_json(f.arch())}, {"meta", meta}}.dump();
  atomic_write(path, [&](std::ostream& out) {
    out.write(kMagic, 4);
    detail::write_le<std::uint32_t>(out, kVersion);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& b : f.blocks()) {
      detail::write_doubles(out, b.weight.values());
      detail::write_doubles(out, b.bias);
      detail::write_doubles(out, b.sn_u);
      detail::write_le(out, b.sn_sigma);
      detail::write_doubles(out, b.gamma_weight.values());
      detail::write_doubles(out, b.gamma_bias);
      detail::write_doubles(out, b.beta_weight.values());
      detail::write_doubles(out, b.beta_bias);
    }
    detail::write_doubles(out, f.out_weight().values());
    detail::write_doubles(out, f.out_bias());
    detail::write_doubles(out, f.out_sn_u());
    detail::write_le(out, f.out_sn_sigma());
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path.string() + "'");

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CorruptCheckpoint("checkpoint: bad magic in '" + path.string() + "'");
  }
  std::uint32_t version = 0;
  std::uint32_t json_len = 0;
  if (!detail::read_le(in, version) || version != kVersion) throw CorruptCheckpoint("checkpoint: bad version");
  if (!detail::read_le(in, json_len)) throw CorruptCheckpoint("checkpoint: truncated header");
  std::string header(json_len, '\0');
  if (!in.read(header.data(), json_len)) throw CorruptCheckpoint("checkpoint: truncated metadata");

  nlohmann::json doc;
  ArchConfig arch;
  try {
    doc = nlohmann::json::parse(header);
    arch = arch_from_json(doc.at("arch"));
    arch.validate();
  } catch (const std::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint: bad metadata: ") + e.what());
  }

  std::vector<BlockParams> blocks(arch.n_blocks);
  std::size_t in_dim = arch.latent_dim;
  for (auto& b : blocks) {
    b.weight = Matrix(arch.hidden, in_dim);
    b.bias.resize(arch.hidden);
    b.sn_u.resize(arch.hidden);
    b.gamma_weight = Matrix(arch.hidden, arch.cond_dim);
    b.gamma_bias.resize(arch.hidden);
    b.beta_weight = Matrix(arch.hidden, arch.cond_dim);
    b.beta_bias.resize(arch.hidden);
    read_tensor(in, b.weight.values());
    read_tensor(in, b.bias);
    read_tensor(in, b.sn_u);
    b.sn_sigma = read_scalar(in);
    read_tensor(in, b.gamma_weight.values());
    read_tensor(in, b.gamma_bias);
    read_tensor(in, b.beta_weight.values());
    read_tensor(in, b.beta_bias);
    in_dim = arch.hidden;
  }
  Matrix out_weight(arch.latent_dim, in_dim);
  Vector out_bias(arch.latent_dim);
  Vector out_u(arch.latent_dim);
  read_tensor(in, out_weight.values());
  read_tensor(in, out_bias);
  read_tensor(in, out_u);
  const double out_sigma = read_scalar(in);
  if (in.peek() != std::char_traits<char>::eof()) throw CorruptCheckpoint("checkpoint: trailing bytes");

  try {
    AuxMap map(arch, std::move(blocks), std::move(out_weight), std::move(out_bias), std::move(out_u), out_sigma);
    return Checkpoint{std::move(map), doc.value("meta", nlohmann::json::object())};
  } catch (const InvalidArgument& e) {
    throw CorruptCheckpoint(std::string("checkpoint: inconsistent tensors: ") + e.what());
  }
}

}  // namespace sgf
