#include "dadnn/param_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "dadnn/errors.hpp"

namespace dadnn {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'D', 'N', 'N', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <typename U>
U get_le(std::istream& in, const std::string& what) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf))
    throw DataError("parameter file truncated while reading " + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

std::string get_bytes(std::istream& in, std::size_t n, const std::string& what) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw DataError("parameter file truncated while reading " + what);
  return s;
}

}  // namespace

ParamFile to_param_file(const ParameterStore& params, const KeyValues& meta) {
  ParamFile file;
  file.meta = meta;
  for (const auto& b : blocks(params))
    file.blocks.push_back({b.name, b.rows, b.cols, {b.values.begin(), b.values.end()}});
  return file;
}

void write_param_file(const ParamFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write parameter file " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kVersion);
  const std::string text = file.meta.dump();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.blocks.size()));
  for (const auto& b : file.blocks) {
    if (b.values.size() != b.rows * b.cols)
      throw ConfigError("block '" + b.name + "' has " + std::to_string(b.values.size()) +
                        " values for shape " + std::to_string(b.rows) + "x" +
                        std::to_string(b.cols));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put_le<std::uint64_t>(out, b.rows);
    put_le<std::uint64_t>(out, b.cols);
    for (double v : b.values) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw ConfigError("error writing parameter file " + path.string());
}

void export_params(const ParameterStore& params, const std::filesystem::path& path,
                   const KeyValues& meta) {
  write_param_file(to_param_file(params, meta), path);
}

ParamFile read_param_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open parameter file " + path.string());
  const std::string magic = get_bytes(in, sizeof kMagic, "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0)
    throw DataError(path.string() + " is not a DADNN parameter file");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kVersion)
    throw DataError(path.string() + ": unsupported parameter file version " +
                    std::to_string(version));

  ParamFile file;
  const auto meta_len = get_le<std::uint32_t>(in, "metadata length");
  file.meta = KeyValues::parse(get_bytes(in, meta_len, "metadata"), path.string());
  const auto count = get_le<std::uint32_t>(in, "block count");
  for (std::uint32_t b = 0; b < count; ++b) {
    NamedBlock nb;
    const auto name_len = get_le<std::uint32_t>(in, "block name length");
    nb.name = get_bytes(in, name_len, "block name");
    nb.rows = get_le<std::uint64_t>(in, nb.name + " rows");
    nb.cols = get_le<std::uint64_t>(in, nb.name + " cols");
    nb.values.resize(nb.rows * nb.cols);
    for (double& v : nb.values) v = std::bit_cast<double>(get_le<std::uint64_t>(in, nb.name));
    file.blocks.push_back(std::move(nb));
  }
  return file;
}

void load_params(const ParamFile& file, ParameterStore& params, LoadScope scope) {
  std::map<std::string, const NamedBlock*> by_name;
  for (const auto& b : file.blocks) by_name[b.name] = &b;

  for (auto& target : blocks(params)) {
    const bool is_embedding = target.name.starts_with("embedding.");
    if (scope == LoadScope::kEmbeddingsOnly && !is_embedding) continue;
    const auto it = by_name.find(target.name);
    if (it == by_name.end())
      throw ConfigError("parameter file has no block '" + target.name + "'");
    const NamedBlock& src = *it->second;
    if (src.rows != target.rows || src.cols != target.cols) {
      std::string msg = "shape mismatch for block '" + target.name + "': file has " +
                        std::to_string(src.rows) + "x" + std::to_string(src.cols) +
                        ", model expects " + std::to_string(target.rows) + "x" +
                        std::to_string(target.cols);
      if (is_embedding)
        msg += " (field " + target.name.substr(10) + ": vocab " + std::to_string(src.rows) +
               " vs " + std::to_string(target.rows) + ", dim " + std::to_string(src.cols) +
               " vs " + std::to_string(target.cols) + ")";
      throw ConfigError(msg);
    }
    std::copy(src.values.begin(), src.values.end(), target.values.begin());
  }
  if (scope == LoadScope::kFull && by_name.size() != blocks(params).size())
    throw ConfigError("parameter file has blocks the model does not define");
}

ParameterStore import_params(const std::filesystem::path& path, const ModelConfig& config,
                             LoadScope scope) {
  ParameterStore params = init_params(config);
  load_params(read_param_file(path), params, scope);
  return params;
}

}  // namespace dadnn
