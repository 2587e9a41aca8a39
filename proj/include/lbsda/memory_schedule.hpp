#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lbsda {

/// Per-arm storage limit m_r as a function of the round index r.
///   MaxForm:      m_r = max(M, ceil(C (ln r)^2))
///   AdditiveForm: m_r = ceil(C (ln r)^2 + M)
struct MemorySchedule {
  enum class Form { Max, Additive };

  Form form = Form::Additive;
  std::size_t floor = 50;
  double coefficient = 1.0;

  static MemorySchedule unbounded() {
    return {Form::Max, std::numeric_limits<std::size_t>::max(), 0.0};
  }

  std::size_t capacity(std::size_t round) const {
    const double lr = std::log(static_cast<double>(std::max<std::size_t>(round, 1)));
    const double growth = coefficient * lr * lr;
    std::size_t m = 0;
    if (form == Form::Max) {
      m = std::max(floor, static_cast<std::size_t>(std::ceil(growth)));
    } else {
      const double v = std::ceil(growth + static_cast<double>(floor));
      m = v >= static_cast<double>(std::numeric_limits<std::size_t>::max())
              ? std::numeric_limits<std::size_t>::max()
              : static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(m, 1);
  }

  friend bool operator==(const MemorySchedule&, const MemorySchedule&) = default;
};

inline std::string_view schedule_form_name(MemorySchedule::Form f) {
  return f == MemorySchedule::Form::Max ? "max" : "additive";
}

inline std::optional<MemorySchedule::Form> parse_schedule_form(std::string_view s) {
  if (s == "max") return MemorySchedule::Form::Max;
  if (s == "additive") return MemorySchedule::Form::Additive;
  return std::nullopt;
}

/// Parses "additive:<floor>[:<coef>]" or "max:<floor>[:<coef>]".
inline std::optional<MemorySchedule> parse_schedule(std::string_view text) {
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return std::nullopt;
  auto form = parse_schedule_form(text.substr(0, c1));
  if (!form) return std::nullopt;
  std::string rest(text.substr(c1 + 1));
  MemorySchedule s;
  s.form = *form;
  try {
    std::size_t used = 0;
    const auto c2 = rest.find(':');
    const std::string floor_text = rest.substr(0, c2);
    const unsigned long long fl = std::stoull(floor_text, &used);
    if (used != floor_text.size()) return std::nullopt;
    s.floor = static_cast<std::size_t>(fl);
    if (c2 != std::string::npos) {
      const std::string coef_text = rest.substr(c2 + 1);
      s.coefficient = std::stod(coef_text, &used);
      if (used != coef_text.size() || !(s.coefficient >= 0.0)) return std::nullopt;
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return s;
}

}  // namespace lbsda
