#include "diagens/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <utility>

namespace diagens {

namespace {

constexpr char kMagic[8] = {'D', 'G', 'N', 'S', 'T', 'N', '0', '1'};

enum Kind : std::uint32_t { kMps = 1, kMpo = 2, kFilterState = 3 };

template <typename T>
constexpr std::uint32_t scalar_tag() {
  return is_complex_v<T> ? 1u : 0u;
}

template <typename V>
void put(std::ostream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw dimension_error("truncated or unreadable container file");
  return v;
}

void put_header(std::ostream& os, std::uint32_t kind, std::uint32_t scalar) {
  os.write(kMagic, sizeof(kMagic));
  put(os, kind);
  put(os, scalar);
}

void check_header(std::istream& is, std::uint32_t kind, std::uint32_t scalar) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw dimension_error("bad container magic");
  if (get<std::uint32_t>(is) != kind)
    throw dimension_error("container holds a different object kind");
  if (get<std::uint32_t>(is) != scalar)
    throw dimension_error("container holds a different scalar type");
}

template <typename T>
void put_tensor(std::ostream& os, const DenseTensor<T>& t) {
  put(os, (std::uint32_t)t.rank());
  for (index_t a = 0; a < t.rank(); ++a) put(os, (std::uint64_t)t.dim(a));
  os.write(reinterpret_cast<const char*>(t.data()),
           (std::streamsize)(sizeof(T) * (size_t)t.size()));
}

template <typename T>
DenseTensor<T> get_tensor(std::istream& is) {
  const auto rank = get<std::uint32_t>(is);
  if (rank > 8) throw dimension_error("implausible tensor rank in container");
  std::vector<index_t> shape(rank);
  for (auto& d : shape) {
    d = (index_t)get<std::uint64_t>(is);
    if (d <= 0) throw dimension_error("non-positive dimension in container");
  }
  DenseTensor<T> t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          (std::streamsize)(sizeof(T) * (size_t)t.size()));
  if (!is) throw dimension_error("truncated tensor payload");
  return t;
}

template <typename T, typename Chain>
void put_chain(std::ostream& os, const Chain& chain) {
  put(os, (std::uint64_t)chain.sites.size());
  for (const auto& s : chain.sites) put_tensor<T>(os, s);
}

template <typename T, typename Chain>
Chain get_chain(std::istream& is) {
  Chain out;
  const auto n = get<std::uint64_t>(is);
  if (n > (1u << 20)) throw dimension_error("implausible chain length");
  out.sites.reserve((size_t)n);
  for (std::uint64_t i = 0; i < n; ++i)
    out.sites.push_back(get_tensor<T>(is));
  out.validate();
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw dimension_error("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw dimension_error("cannot open '" + path + "' for reading");
  return is;
}

}  // namespace

template <typename T>
void save_mps(const MpsVector<T>& psi, const std::string& path) {
  psi.validate();
  auto os = open_out(path);
  put_header(os, kMps, scalar_tag<T>());
  put_chain<T>(os, psi);
  if (!os) throw dimension_error("write failed for '" + path + "'");
}

template <typename T>
MpsVector<T> load_mps(const std::string& path) {
  auto is = open_in(path);
  check_header(is, kMps, scalar_tag<T>());
  return get_chain<T, MpsVector<T>>(is);
}

template <typename T>
void save_mpo(const MpoOperator<T>& op, const std::string& path) {
  op.validate();
  auto os = open_out(path);
  put_header(os, kMpo, scalar_tag<T>());
  put_chain<T>(os, op);
  if (!os) throw dimension_error("write failed for '" + path + "'");
}

template <typename T>
MpoOperator<T> load_mpo(const std::string& path) {
  auto is = open_in(path);
  check_header(is, kMpo, scalar_tag<T>());
  return get_chain<T, MpoOperator<T>>(is);
}

template <typename T>
void save_filter_state(const FilterRun<T>& run, const std::string& path) {
  auto os = open_out(path);
  put_header(os, kFilterState, scalar_tag<T>());
  put(os, (std::int64_t)run.order_done);
  put(os, run.cumulative_discarded_weight);
  put(os, run.seconds_elapsed);
  put_chain<T>(os, run.t_prev);
  put_chain<T>(os, run.t_curr);
  put_chain<T>(os, run.accumulator);
  if (!os) throw dimension_error("write failed for '" + path + "'");
}

template <typename T>
FilterRun<T> load_filter_state(const std::string& path,
                               const MpoOperator<T>& h_c, FilterConfig cfg) {
  auto is = open_in(path);
  check_header(is, kFilterState, scalar_tag<T>());
  FilterRun<T> run;
  run.order_done = (index_t)get<std::int64_t>(is);
  run.cumulative_discarded_weight = get<double>(is);
  run.seconds_elapsed = get<double>(is);
  run.t_prev = get_chain<T, MpsVector<T>>(is);
  run.t_curr = get_chain<T, MpsVector<T>>(is);
  run.accumulator = get_chain<T, MpsVector<T>>(is);
  if (run.order_done < 0 || run.order_done > cfg.order)
    throw dimension_error("snapshot order_done outside the config's range");
  if (run.accumulator.length() != h_c.length())
    throw dimension_error("snapshot length does not match the operator");
  run.h_c = h_c;
  run.config =
      normalize_filter_config(std::move(cfg), run.accumulator.length());
  return run;
}

#define DIAGENS_INSTANTIATE_SERIALIZE(T)                                   \
  template void save_mps<T>(const MpsVector<T>&, const std::string&);      \
  template MpsVector<T> load_mps<T>(const std::string&);                   \
  template void save_mpo<T>(const MpoOperator<T>&, const std::string&);    \
  template MpoOperator<T> load_mpo<T>(const std::string&);                 \
  template void save_filter_state<T>(const FilterRun<T>&,                  \
                                     const std::string&);                  \
  template FilterRun<T> load_filter_state<T>(                              \
      const std::string&, const MpoOperator<T>&, FilterConfig);

DIAGENS_INSTANTIATE_SERIALIZE(double)
DIAGENS_INSTANTIATE_SERIALIZE(cplx)

#undef DIAGENS_INSTANTIATE_SERIALIZE

}  // namespace diagens
