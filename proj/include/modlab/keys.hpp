#pragma once

// Canonical value keys for modulation functions and channels. Registration
// dedup in the operator algebra and slice caching both key off these strings;
// shortest round-trip float formatting keeps them exact.

#include "modlab/spectral.hpp"

namespace modlab {

namespace detail {
inline void key_vec(std::string& out, const Vec& v) {
  out.push_back('[');
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += fmt_double(v[i]);
  }
  out.push_back(']');
}
inline void key_complex(std::string& out, const Complex& c) {
  out.push_back('(');
  out += fmt_double(c.real());
  out.push_back(',');
  out += fmt_double(c.imag());
  out.push_back(')');
}
}  // namespace detail

inline std::string function_key(const ModulationFunction& f) {
  std::string out;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket>) {
          out += "gauss";
          detail::key_complex(out, n.amplitude);
          detail::key_vec(out, n.center);
          detail::key_vec(out, n.widths);
          detail::key_vec(out, n.carrier);
        } else if constexpr (std::is_same_v<T, BumpFunction>) {
          out += "bump";
          detail::key_complex(out, n.amplitude);
          detail::key_vec(out, n.center);
          detail::key_vec(out, n.radii);
          detail::key_vec(out, n.carrier);
        } else if constexpr (std::is_same_v<T, GridBacked>) {
          const auto& d = n.grid->data();
          std::uint64_t h = fnv1a({reinterpret_cast<const char*>(d.data()),
                                   d.size() * sizeof(Complex)});
          out += "grid{";
          for (int a = 0; a < n.grid->spec().dim(); ++a) {
            out += std::to_string(n.grid->spec().points(a)) + "x" +
                   fmt_double(n.grid->spec().half_width(a)) + ";";
          }
          out += hex64(h);
          out.push_back('}');
        } else {
          out += "sum{";
          for (const auto& t : n.terms) {
            detail::key_complex(out, t.weight);
            out += function_key(*t.fn);
            out.push_back(';');
          }
          out.push_back('}');
        }
      },
      f.node());
  return out;
}

inline std::string functional_key(const LocalFunctional& F) {
  switch (F.kind) {
    case LocalFunctional::Kind::identity: return "id";
    case LocalFunctional::Kind::power: return "pow" + std::to_string(F.exponent);
    default: return "gradsq";
  }
}

}  // namespace modlab
