#include "rdnet/io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rdnet/errors.hpp"

namespace rdnet::io {

namespace {

constexpr const char* kVolumeMagic = "RDVOL 1";
constexpr const char* kCheckpointMagic = "RDNCKPT 1";

std::string float_repr(float v) {
  std::ostringstream os;
  os << std::setprecision(9) << v;  // enough digits for exact float round-trip
  return os.str();
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw DataError("cannot open " + path);
  return f;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw DataError("cannot open " + path + " for writing");
  return f;
}

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& section,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw DataError("config: unknown key '" + it.key() + "' in section " + section);
  }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).template get<T>();
}

template <typename T, std::size_t N>
void get_array_if(const json& obj, const char* key, std::array<T, N>& out) {
  if (!obj.contains(key)) return;
  const auto& a = obj.at(key);
  if (!a.is_array() || a.size() != N)
    throw DataError(std::string("config: key '") + key + "' must be an array of " +
                    std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<T>();
}

}  // namespace

void write_volume(const std::string& path, const Volume& v) {
  auto f = open_out(path, std::ios::binary);
  f << kVolumeMagic << '\n'
    << "dims " << v.dims[0] << ' ' << v.dims[1] << ' ' << v.dims[2] << '\n'
    << "spacing " << float_repr(v.spacing[0]) << ' ' << float_repr(v.spacing[1]) << ' '
    << float_repr(v.spacing[2]) << '\n'
    << "dtype float32\n"
    << "endian little\n"
    << "data\n";
  f.write(reinterpret_cast<const char*>(v.data.data()),
          std::streamsize(v.data.size() * sizeof(float)));
  if (!f) throw DataError("failed writing " + path);
}

Volume read_volume(const std::string& path) {
  auto f = open_in(path, std::ios::binary);
  std::string line;
  if (!std::getline(f, line) || line != kVolumeMagic)
    throw DataError(path + ": bad magic, expected '" + kVolumeMagic + "'");
  Volume v;
  bool have_dims = false;
  while (std::getline(f, line)) {
    if (line == "data") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") {
      ls >> v.dims[0] >> v.dims[1] >> v.dims[2];
      have_dims = bool(ls);
    } else if (key == "spacing") {
      ls >> v.spacing[0] >> v.spacing[1] >> v.spacing[2];
    } else if (key == "dtype") {
      std::string t;
      ls >> t;
      if (t != "float32") throw DataError(path + ": unsupported dtype " + t);
    } else if (key == "endian") {
      std::string e;
      ls >> e;
      if (e != "little") throw DataError(path + ": unsupported byte order " + e);
    } else {
      throw DataError(path + ": unknown header field '" + key + "'");
    }
  }
  if (!have_dims || v.dims[0] < 1 || v.dims[1] < 1 || v.dims[2] < 1)
    throw DataError(path + ": missing or invalid dims");
  const std::size_t expect = std::size_t(v.size()) * sizeof(float);
  v.data.resize(std::size_t(v.size()));
  f.read(reinterpret_cast<char*>(v.data.data()), std::streamsize(expect));
  const std::size_t got = std::size_t(f.gcount());
  if (got != expect)
    throw DataError(path + ": payload mismatch, expected " + std::to_string(expect) +
                    " bytes, got " + std::to_string(got));
  return v;
}

std::vector<BoxAnnotation> read_annotations(const std::string& path) {
  auto f = open_in(path);
  std::vector<BoxAnnotation> boxes;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    BoxAnnotation b;
    if (!(ls >> b.label)) continue;  // blank or comment-only line
    if (!(ls >> b.center[0] >> b.center[1] >> b.center[2] >> b.size[0] >> b.size[1] >> b.size[2]))
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed annotation line");
    boxes.push_back(b);
  }
  return boxes;
}

void write_annotations(const std::string& path, const std::vector<BoxAnnotation>& boxes) {
  auto f = open_out(path);
  f << "# label cx cy cz w l h (voxel units)\n";
  for (const auto& b : boxes) {
    f << b.label;
    for (float v : b.center) f << ' ' << float_repr(v);
    for (float v : b.size) f << ' ' << float_repr(v);
    f << '\n';
  }
}

void write_detections(const std::string& path, const std::vector<Detection>& dets) {
  auto f = open_out(path);
  f << "# unit label p cx cy cz w l h\n";
  for (const auto& d : dets) {
    f << "vox " << d.label << ' ' << float_repr(d.probability);
    for (float v : d.center_vox) f << ' ' << float_repr(v);
    for (float v : d.size_vox) f << ' ' << float_repr(v);
    f << '\n';
    f << "mm " << d.label << ' ' << float_repr(d.probability);
    for (float v : d.center_mm) f << ' ' << float_repr(v);
    for (float v : d.size_mm) f << ' ' << float_repr(v);
    f << '\n';
  }
}

std::vector<Detection> read_detections(const std::string& path) {
  auto f = open_in(path);
  std::vector<Detection> out;
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string unit;
    if (!(ls >> unit)) continue;
    Detection d;
    std::array<float, 3> center, size;
    if (!(ls >> d.label >> d.probability >> center[0] >> center[1] >> center[2] >> size[0] >>
          size[1] >> size[2]))
      throw DataError(path + ": malformed detection line: " + line);
    if (unit == "vox") {
      d.center_vox = center;
      d.size_vox = size;
      out.push_back(d);
    } else if (unit == "mm") {
      if (out.empty() || out.back().label != d.label)
        throw DataError(path + ": mm record without matching vox record");
      out.back().center_mm = center;
      out.back().size_mm = size;
    } else {
      throw DataError(path + ": unknown detection unit '" + unit + "'");
    }
  }
  return out;
}

CropResult crop_or_pad(const Volume& v, std::array<int, 3> target) {
  CropResult res;
  res.volume = Volume::zeros(target, v.spacing);
  std::array<int, 3> src_lo{}, dst_lo{}, count{};
  for (int a = 0; a < 3; ++a) {
    if (target[a] < 1) throw DataError("crop_or_pad: target dims must be positive");
    if (v.dims[a] >= target[a]) {
      src_lo[a] = (v.dims[a] - target[a]) / 2;
      dst_lo[a] = 0;
      count[a] = target[a];
      res.shift[a] = -src_lo[a];
    } else {
      src_lo[a] = 0;
      dst_lo[a] = (target[a] - v.dims[a]) / 2;
      count[a] = v.dims[a];
      res.shift[a] = dst_lo[a];
    }
  }
  for (int z = 0; z < count[2]; ++z)
    for (int y = 0; y < count[1]; ++y)
      for (int x = 0; x < count[0]; ++x)
        res.volume.at(dst_lo[0] + x, dst_lo[1] + y, dst_lo[2] + z) =
            v.at(src_lo[0] + x, src_lo[1] + y, src_lo[2] + z);
  return res;
}

std::vector<BoxAnnotation> shift_annotations(std::vector<BoxAnnotation> boxes,
                                             std::array<int, 3> shift) {
  for (auto& b : boxes)
    for (int a = 0; a < 3; ++a) b.center[a] += float(shift[a]);
  return boxes;
}

namespace {

json network_to_json(const NetworkConfig& c) {
  json j;
  j["input_dims"] = c.input_dims;
  j["base_channels"] = c.base_channels;
  j["levels"] = c.levels;
  j["pool_sizes"] = c.pool_sizes;
  j["up_blocks"] = c.up_blocks;
  j["feature_channels"] = c.feature_channels;
  j["structures"] = c.structures;
  j["branch_channels"] = c.branch_channels;
  j["dropout_rate"] = c.dropout_rate;
  return j;
}

NetworkConfig network_from_json(const json& j) {
  reject_unknown_keys(j, "network",
                      {"input_dims", "base_channels", "levels", "pool_sizes", "up_blocks",
                       "feature_channels", "structures", "branch_channels", "dropout_rate"});
  NetworkConfig c;
  get_array_if(j, "input_dims", c.input_dims);
  get_if(j, "base_channels", c.base_channels);
  get_if(j, "levels", c.levels);
  if (j.contains("pool_sizes")) {
    c.pool_sizes.clear();
    for (const auto& p : j.at("pool_sizes")) {
      if (!p.is_array() || p.size() != 3)
        throw DataError("config: pool_sizes entries must be (d,h,w) triples");
      c.pool_sizes.push_back({p[0].get<int>(), p[1].get<int>(), p[2].get<int>()});
    }
  }
  get_if(j, "up_blocks", c.up_blocks);
  get_if(j, "feature_channels", c.feature_channels);
  get_if(j, "structures", c.structures);
  get_if(j, "branch_channels", c.branch_channels);
  get_if(j, "dropout_rate", c.dropout_rate);
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetworkConfig& config,
                     const ModelParams& params) {
  auto f = open_out(path, std::ios::binary);
  const std::string cfg = network_to_json(config).dump();
  f << kCheckpointMagic << '\n';
  f << "config " << cfg.size() << '\n' << cfg << '\n';
  f << "params " << params.named.size() << '\n';
  for (const auto& [name, t] : params.named) {
    f << "param " << name << ' ' << t.shape().size();
    for (int e : t.shape()) f << ' ' << e;
    f << '\n';
    f.write(reinterpret_cast<const char*>(t.data().data()),
            std::streamsize(t.data().size() * sizeof(float)));
  }
  if (!f) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto f = open_in(path, std::ios::binary);
  std::string line;
  if (!std::getline(f, line) || line != kCheckpointMagic)
    throw DataError(path + ": bad or unsupported checkpoint version, expected '" +
                    std::string(kCheckpointMagic) + "'");
  std::size_t cfg_len = 0;
  f >> line >> cfg_len;
  if (line != "config") throw DataError(path + ": malformed checkpoint header");
  f.get();  // newline
  std::string cfg(cfg_len, '\0');
  f.read(cfg.data(), std::streamsize(cfg_len));
  f.get();

  Checkpoint ck;
  try {
    ck.config = network_from_json(json::parse(cfg));
  } catch (const json::exception& e) {
    throw DataError(path + ": bad embedded config: " + e.what());
  }

  std::size_t count = 0;
  f >> line >> count;
  if (line != "params") throw DataError(path + ": malformed checkpoint header");
  f.get();
  for (std::size_t i = 0; i < count; ++i) {
    std::string tag, name;
    std::size_t ndim = 0;
    if (!(f >> tag >> name >> ndim) || tag != "param")
      throw DataError(path + ": malformed parameter record " + std::to_string(i));
    std::vector<int> shape(ndim);
    for (auto& e : shape) f >> e;
    f.get();
    std::vector<float> data(std::size_t(shape_size(shape)));
    f.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * sizeof(float)));
    if (std::size_t(f.gcount()) != data.size() * sizeof(float))
      throw DataError(path + ": truncated parameter blob '" + name + "'");
    ck.params.add(name, Tensor::from_data(std::move(shape), std::move(data), true));
  }
  return ck;
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(j, "(top level)",
                      {"network", "train", "augment", "phantom", "noise", "evaluate"});
  RunConfig c;
  if (j.contains("network")) c.network = network_from_json(j.at("network"));
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown_keys(t, "train",
                        {"learning_rate", "max_steps", "batch_size", "seed", "checkpoint_every",
                         "patience", "min_delta"});
    get_if(t, "learning_rate", c.train.learning_rate);
    get_if(t, "max_steps", c.train.max_steps);
    get_if(t, "batch_size", c.train.batch_size);
    get_if(t, "seed", c.train.seed);
    get_if(t, "checkpoint_every", c.train.checkpoint_every);
    get_if(t, "patience", c.train.patience);
    get_if(t, "min_delta", c.train.min_delta);
  }
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    reject_unknown_keys(a, "augment", {"count", "sigma"});
    get_if(a, "count", c.augment.count);
    get_if(a, "sigma", c.augment.sigma);
  }
  if (j.contains("phantom")) {
    const auto& p = j.at("phantom");
    reject_unknown_keys(p, "phantom",
                        {"dims", "spacing", "blob_count", "blob_semi_axes", "gap",
                         "target_ordinal", "background_intensity", "blob_intensity",
                         "feature_intensity", "center_jitter", "size_jitter"});
    get_array_if(p, "dims", c.phantom.dims);
    get_array_if(p, "spacing", c.phantom.spacing);
    get_if(p, "blob_count", c.phantom.blob_count);
    get_array_if(p, "blob_semi_axes", c.phantom.blob_semi_axes);
    get_if(p, "gap", c.phantom.gap);
    get_if(p, "target_ordinal", c.phantom.target_ordinal);
    get_if(p, "background_intensity", c.phantom.background_intensity);
    get_if(p, "blob_intensity", c.phantom.blob_intensity);
    get_if(p, "feature_intensity", c.phantom.feature_intensity);
    get_if(p, "center_jitter", c.phantom.center_jitter);
    get_if(p, "size_jitter", c.phantom.size_jitter);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    reject_unknown_keys(n, "noise",
                        {"low_sigma", "high_sigma", "high_shading", "high_streak_amplitude",
                         "high_streak_count"});
    get_if(n, "low_sigma", c.noise.low_sigma);
    get_if(n, "high_sigma", c.noise.high_sigma);
    get_if(n, "high_shading", c.noise.high_shading);
    get_if(n, "high_streak_amplitude", c.noise.high_streak_amplitude);
    get_if(n, "high_streak_count", c.noise.high_streak_count);
  }
  if (j.contains("evaluate")) {
    const auto& e = j.at("evaluate");
    reject_unknown_keys(e, "evaluate", {"threshold"});
    get_if(e, "threshold", c.evaluate.threshold);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  auto f = open_in(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace rdnet::io
