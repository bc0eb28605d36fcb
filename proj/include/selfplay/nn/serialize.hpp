#pragma once

// Portable parameter format, version 1:
//   magic[4] | u32 version | u32 activation | u32 layer_count |
//   layer_count x (u32 rows, u32 cols) | u32 extra_len |
//   row-major f64 data: W0, b0, W1, b1, ..., then the extra vectors.
// Policies carry three extra vectors (log_std, action_low, action_high) of
// length extra_len; value functions carry none (extra_len = 0).

#include <string>
#include <string_view>

#include "selfplay/errors.hpp"
#include "selfplay/nn/adam.hpp"
#include "selfplay/nn/policy.hpp"
#include "selfplay/util/binary_io.hpp"

namespace selfplay {

inline constexpr std::uint32_t kParamFormatVersion = 1;

namespace detail {

inline void write_matrix(ByteWriter& w, const RealMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
}

inline void read_matrix(ByteReader& rd, RealMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.f64();
}

inline void write_vector(ByteWriter& w, const RealVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

inline void read_vector(ByteReader& rd, RealVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rd.f64();
}

inline void write_mlp_header(ByteWriter& w, std::string_view magic, const MlpParams& p, std::uint32_t extra) {
  w.bytes(magic);
  w.u32(kParamFormatVersion);
  w.u32(static_cast<std::uint32_t>(p.hidden_activation));
  w.u32(static_cast<std::uint32_t>(p.layers.size()));
  for (const auto& l : p.layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
  }
  w.u32(extra);
}

inline MlpParams read_mlp_header(ByteReader& rd, std::string_view magic, std::uint32_t& extra) {
  if (rd.bytes(4) != magic) throw IntegrityError("bad parameter magic, expected " + std::string(magic));
  const auto version = rd.u32();
  if (version != kParamFormatVersion)
    throw IntegrityError("unsupported parameter format version " + std::to_string(version));
  const auto act = rd.u32();
  if (act > 2) throw IntegrityError("bad activation tag");
  MlpParams p;
  p.hidden_activation = static_cast<Activation>(act);
  const auto n = rd.u32();
  if (n == 0 || n > 64) throw IntegrityError("bad layer count");
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto rows = rd.u32();
    const auto cols = rd.u32();
    if (rows == 0 || cols == 0 || rows > (1u << 16) || cols > (1u << 16)) throw IntegrityError("bad layer shape");
    p.layers.push_back({RealMatrix(rows, cols), RealVector(rows)});
  }
  for (std::size_t k = 0; k + 1 < p.layers.size(); ++k)
    if (p.layers[k + 1].weight.cols() != p.layers[k].weight.rows()) throw IntegrityError("layer shapes do not chain");
  extra = rd.u32();
  return p;
}

inline void write_mlp_data(ByteWriter& w, const MlpParams& p) {
  for (const auto& l : p.layers) {
    write_matrix(w, l.weight);
    write_vector(w, l.bias);
  }
}

inline void read_mlp_data(ByteReader& rd, MlpParams& p) {
  for (auto& l : p.layers) {
    read_matrix(rd, l.weight);
    read_vector(rd, l.bias);
  }
}

}  // namespace detail

inline std::string serialize_policy(const GaussianPolicy& p) {
  ByteWriter w;
  const auto d = static_cast<std::uint32_t>(p.log_std.size());
  detail::write_mlp_header(w, "SPGP", p.mean_net, d);
  detail::write_mlp_data(w, p.mean_net);
  detail::write_vector(w, p.log_std);
  detail::write_vector(w, p.action_low);
  detail::write_vector(w, p.action_high);
  return w.take();
}

inline GaussianPolicy deserialize_policy(std::string_view bytes) {
  ByteReader rd(bytes);
  std::uint32_t d = 0;
  GaussianPolicy p;
  p.mean_net = detail::read_mlp_header(rd, "SPGP", d);
  if (d != p.mean_net.output_dim()) throw IntegrityError("log_std length does not match action dim");
  detail::read_mlp_data(rd, p.mean_net);
  p.log_std.resize(d);
  p.action_low.resize(d);
  p.action_high.resize(d);
  detail::read_vector(rd, p.log_std);
  detail::read_vector(rd, p.action_low);
  detail::read_vector(rd, p.action_high);
  if (!rd.at_end()) throw IntegrityError("trailing bytes after policy record");
  return p;
}

inline std::string serialize_value(const ValueFunction& v) {
  ByteWriter w;
  detail::write_mlp_header(w, "SPVF", v.net, 0);
  detail::write_mlp_data(w, v.net);
  return w.take();
}

inline ValueFunction deserialize_value(std::string_view bytes) {
  ByteReader rd(bytes);
  std::uint32_t extra = 0;
  ValueFunction v{detail::read_mlp_header(rd, "SPVF", extra)};
  if (extra != 0 || v.net.output_dim() != 1) throw IntegrityError("value record must have scalar output");
  detail::read_mlp_data(rd, v.net);
  if (!rd.at_end()) throw IntegrityError("trailing bytes after value record");
  return v;
}

inline void write_adam(ByteWriter& w, const AdamState& s) {
  w.bytes("SPAD");
  w.u32(kParamFormatVersion);
  w.i64(s.step);
  w.f64(s.beta1);
  w.f64(s.beta2);
  w.f64(s.epsilon);
  w.u32(static_cast<std::uint32_t>(s.first_moment.size()));
  for (const auto& t : s.first_moment) {
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
  }
  for (const auto& t : s.first_moment) detail::write_matrix(w, t);
  for (const auto& t : s.second_moment) detail::write_matrix(w, t);
}

inline AdamState read_adam(ByteReader& rd) {
  if (rd.bytes(4) != "SPAD") throw IntegrityError("bad optimizer magic");
  if (rd.u32() != kParamFormatVersion) throw IntegrityError("unsupported optimizer format version");
  AdamState s;
  s.step = rd.i64();
  s.beta1 = rd.f64();
  s.beta2 = rd.f64();
  s.epsilon = rd.f64();
  const auto n = rd.u32();
  if (n > 1024) throw IntegrityError("bad optimizer tensor count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto r = rd.u32();
    const auto c = rd.u32();
    if (r > (1u << 16) || c > (1u << 16)) throw IntegrityError("bad optimizer tensor shape");
    s.first_moment.emplace_back(r, c);
    s.second_moment.emplace_back(r, c);
  }
  for (auto& t : s.first_moment) detail::read_matrix(rd, t);
  for (auto& t : s.second_moment) detail::read_matrix(rd, t);
  return s;
}

}  // namespace selfplay
