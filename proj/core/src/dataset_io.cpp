#include "dadnn/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "dadnn/errors.hpp"
#include "dadnn/kv.hpp"

namespace dadnn::synth {

namespace {

std::string header_line(std::size_t fields) {
  std::string h = "scene_id";
  for (std::size_t j = 1; j <= fields; ++j) h += ",f" + std::to_string(j);
  return h + ",label";
}

[[noreturn]] void row_error(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::int64_t parse_cell(std::string_view cell, const std::filesystem::path& path, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    row_error(path, line, "not an integer: '" + std::string(cell) + "'");
  return v;
}

}  // namespace

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta");
  return p;
}

void write_instances(const std::filesystem::path& csv_path, const InstanceFile& data) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + csv_path.string());
  const std::size_t f = data.vocab_sizes.size();
  std::string buf = header_line(f) + "\n";
  std::map<int, std::size_t> counts;
  for (const auto& x : data.instances) {
    buf += std::to_string(x.scene_id);
    for (auto v : x.features) buf += "," + std::to_string(v);
    buf += "," + std::to_string(x.label) + "\n";
    ++counts[x.scene_id];
  }
  out << buf;
  if (!out) throw ConfigError("error writing " + csv_path.string());

  KeyValues meta;
  meta.set("scenes", static_cast<std::int64_t>(data.scenes));
  meta.set("fields", static_cast<std::int64_t>(f));
  meta.set_list("vocab_sizes", data.vocab_sizes);
  meta.set("rows", static_cast<std::int64_t>(data.instances.size()));
  for (const auto& [scene, n] : counts)
    meta.set("count." + std::to_string(scene), static_cast<std::int64_t>(n));
  meta.save(meta_path_for(csv_path));
}

InstanceFile read_instances(const std::filesystem::path& csv_path) {
  const auto meta = KeyValues::load(meta_path_for(csv_path));
  InstanceFile data;
  data.scenes = meta.get_size("scenes", 0);
  data.vocab_sizes = meta.get_size_list("vocab_sizes", {});
  const std::size_t f = meta.get_size("fields", data.vocab_sizes.size());
  if (f == 0 || f != data.vocab_sizes.size())
    throw DataError(meta_path_for(csv_path).string() + ": fields and vocab_sizes disagree");

  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + csv_path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(csv_path.string() + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header_line(f))
    row_error(csv_path, line_no, "expected header '" + header_line(f) + "'");

  std::map<int, std::size_t> counts;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) row_error(csv_path, line_no, "blank row");
    Instance x;
    x.features.reserve(f);
    std::size_t col = 0, start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string_view cell =
          std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start);
      const auto v = parse_cell(cell, csv_path, line_no);
      if (col == 0) {
        if (v < 0 || static_cast<std::size_t>(v) > data.scenes)
          row_error(csv_path, line_no, "scene id " + std::to_string(v) + " outside 0.." +
                                           std::to_string(data.scenes));
        x.scene_id = static_cast<int>(v);
      } else if (col <= f) {
        if (v < 0 || static_cast<std::size_t>(v) >= data.vocab_sizes[col - 1])
          row_error(csv_path, line_no, "feature f" + std::to_string(col) + " index " +
                                           std::to_string(v) + " outside vocabulary of " +
                                           std::to_string(data.vocab_sizes[col - 1]));
        x.features.push_back(static_cast<std::uint32_t>(v));
      } else if (col == f + 1) {
        if (v != 0 && v != 1) row_error(csv_path, line_no, "label must be 0 or 1");
        x.label = static_cast<int>(v);
      }
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != f + 2)
      row_error(csv_path, line_no, "expected " + std::to_string(f + 2) + " columns, got " +
                                       std::to_string(col));
    ++counts[x.scene_id];
    data.instances.push_back(std::move(x));
  }
  if (data.instances.empty()) throw DataError(csv_path.string() + ": no data rows");

  if (meta.contains("rows") && meta.get_size("rows", 0) != data.instances.size())
    throw DataError(csv_path.string() + ": row count disagrees with " +
                    meta_path_for(csv_path).string());
  for (const auto& [scene, n] : counts) {
    const std::string key = "count." + std::to_string(scene);
    if (meta.contains(key) && meta.get_size(key, 0) != n)
      throw DataError(csv_path.string() + ": scene " + std::to_string(scene) +
                      " count disagrees with metadata");
  }
  return data;
}

void write_dataset(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_instances(dir / "train.csv", {split.train, split.scenes, split.vocab_sizes});
  write_instances(dir / "test.csv", {split.test, split.scenes, split.vocab_sizes});
}

DatasetSplit read_dataset(const std::filesystem::path& dir) {
  InstanceFile train = read_instances(dir / "train.csv");
  InstanceFile test = read_instances(dir / "test.csv");
  if (train.vocab_sizes != test.vocab_sizes || train.scenes != test.scenes)
    throw DataError(dir.string() + ": train and test metadata disagree");
  return {std::move(train.instances), std::move(test.instances), train.scenes,
          std::move(train.vocab_sizes)};
}

}  // namespace dadnn::synth
