#include "ocgs/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ocgs/error.hpp"

namespace ocgs {

namespace {

constexpr char kMagic[8] = {'O', 'C', 'G', 'S', 'C', 'K', 'P', 'T'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  template <typename T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    bytes(v.data(), v.size() * sizeof(T));
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> b) : buf_(std::move(b)) {}
  template <typename T>
  T pod() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  void take(void* out, std::size_t n) {
    if (n > buf_.size() - pos_) throw Error(ErrorKind::checkpoint, "checkpoint is truncated at byte " + std::to_string(pos_));
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > buf_.size() - pos_) throw Error(ErrorKind::checkpoint, "checkpoint is truncated at byte " + std::to_string(pos_));
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  std::vector<T> vec() {
    const auto n = pod<std::uint64_t>();
    if (n > (buf_.size() - pos_) / sizeof(T))
      throw Error(ErrorKind::checkpoint, "checkpoint is truncated at byte " + std::to_string(pos_));
    std::vector<T> v(n);
    take(v.data(), n * sizeof(T));
    return v;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

template <typename V>
std::vector<double> flatten(const std::vector<V>& rows) {
  std::vector<double> out;
  out.reserve(rows.size() * V::RowsAtCompileTime);
  for (const auto& r : rows)
    for (int i = 0; i < V::RowsAtCompileTime; ++i) out.push_back(r[i]);
  return out;
}

template <typename V>
std::vector<V> unflatten(const std::vector<double>& flat, std::size_t m) {
  constexpr int n = V::RowsAtCompileTime;
  if (flat.size() != m * n) throw Error(ErrorKind::checkpoint, "checkpoint array has the wrong length");
  std::vector<V> out(m);
  for (std::size_t k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i) out[k][i] = flat[k * n + i];
  return out;
}

std::string config_text(const TrainConfig& c) {
  std::ostringstream os;
  for (const auto& [k, v] : c.to_map()) os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& st, const TrainConfig& config) {
  st.splats.check_consistent();
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.str(config_text(config));
  w.pod<std::int32_t>(st.iteration);
  w.pod<std::int32_t>(st.active_sh_degree);
  w.pod<std::uint64_t>(st.seed);
  std::ostringstream rng;
  rng << st.rng;
  w.str(rng.str());
  w.vec(st.permutation);
  w.pod<std::uint32_t>(st.permutation_pos);
  w.pod<std::uint64_t>(st.counters.cloned);
  w.pod<std::uint64_t>(st.counters.split);
  w.pod<std::uint64_t>(st.counters.pruned);

  const SplatSet& s = st.splats;
  w.pod<std::int32_t>(s.sh_degree);
  w.pod<std::uint64_t>(s.size());
  w.vec(flatten(s.position));
  w.vec(flatten(s.rotation));
  w.vec(flatten(s.log_scale));
  w.vec(s.opacity_logit);
  w.vec(s.sh);
  w.vec(s.grad_accum);
  w.vec(s.grad_count);
  w.vec(s.seen_since_prune);
  w.vec(s.max_radius);
  w.vec(s.tag);

  const OptimizerState& o = st.optimizer;
  w.pod<std::uint64_t>(o.step);
  for (int g = 0; g < kGroupCount; ++g) {
    w.pod<std::int32_t>(o.stride[g]);
    w.vec(o.m[g]);
    w.vec(o.v[g]);
  }
  w.bytes(kTrailer, sizeof(kTrailer));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::checkpoint, "cannot write checkpoint " + tmp.string());
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    out.flush();
    if (!out) throw Error(ErrorKind::checkpoint, "short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path, TrainConfig* stored_config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::checkpoint, "cannot open checkpoint " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  char magic[8];
  r.take(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error(ErrorKind::checkpoint, "not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::checkpoint, "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                           std::to_string(kCheckpointVersion) + ")");
  const std::string cfg = r.str();
  TrainState st;
  st.iteration = r.pod<std::int32_t>();
  st.active_sh_degree = r.pod<std::int32_t>();
  st.seed = r.pod<std::uint64_t>();
  std::istringstream rng(r.str());
  rng >> st.rng;
  if (!rng) throw Error(ErrorKind::checkpoint, "corrupt RNG state in checkpoint");
  st.permutation = r.vec<std::uint32_t>();
  st.permutation_pos = r.pod<std::uint32_t>();
  st.counters.cloned = r.pod<std::uint64_t>();
  st.counters.split = r.pod<std::uint64_t>();
  st.counters.pruned = r.pod<std::uint64_t>();

  SplatSet& s = st.splats;
  s.sh_degree = r.pod<std::int32_t>();
  const auto m = r.pod<std::uint64_t>();
  s.position = unflatten<Eigen::Vector3d>(r.vec<double>(), m);
  s.rotation = unflatten<Eigen::Vector4d>(r.vec<double>(), m);
  s.log_scale = unflatten<Eigen::Vector2d>(r.vec<double>(), m);
  s.opacity_logit = r.vec<double>();
  s.sh = r.vec<double>();
  s.grad_accum = r.vec<double>();
  s.grad_count = r.vec<std::uint32_t>();
  s.seen_since_prune = r.vec<std::uint8_t>();
  s.max_radius = r.vec<double>();
  s.tag = r.vec<std::uint32_t>();
  try {
    s.check_consistent();
  } catch (const Error&) {
    throw Error(ErrorKind::checkpoint, "checkpoint splat arrays are inconsistent");
  }
  if (s.sh.size() != m * s.coeffs() * 3) throw Error(ErrorKind::checkpoint, "checkpoint SH array has the wrong length");

  OptimizerState& o = st.optimizer;
  o.step = r.pod<std::uint64_t>();
  for (int g = 0; g < kGroupCount; ++g) {
    o.stride[g] = r.pod<std::int32_t>();
    o.m[g] = r.vec<double>();
    o.v[g] = r.vec<double>();
    if (o.m[g].size() != m * o.stride[g] || o.v[g].size() != m * o.stride[g])
      throw Error(ErrorKind::checkpoint, "checkpoint optimizer rows do not match splats");
  }
  char trailer[4];
  r.take(trailer, sizeof(trailer));
  if (std::memcmp(trailer, kTrailer, sizeof(kTrailer)) != 0 || !r.done())
    throw Error(ErrorKind::checkpoint, "checkpoint trailer missing");

  if (stored_config) {
    std::istringstream cs(cfg);
    std::string line;
    TrainConfig c;
    while (std::getline(cs, line)) {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) c.set(line.substr(0, eq), line.substr(eq + 3));
    }
    *stored_config = c;
  }
  return st;
}

}  // namespace ocgs
