#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <compare>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sandpile {

/// Type of a finite abelian p-group: G = (+)_i Z/p^{parts[i]}, parts weakly
/// decreasing and positive. The empty partition is the trivial group.
class Partition {
public:
  Partition() = default;

  explicit Partition(std::vector<int> parts) : parts_(std::move(parts)) {
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i] < 1) throw std::invalid_argument("partition parts must be positive");
      if (i > 0 && parts_[i] > parts_[i - 1])
        throw std::invalid_argument("partition parts must be weakly decreasing");
    }
  }

  Partition(std::initializer_list<int> parts) : Partition(std::vector<int>(parts)) {}

  /// Sorts into decreasing order and drops zeros.
  static Partition from_multiset(std::vector<int> values) {
    std::erase_if(values, [](int v) { return v == 0; });
    std::sort(values.begin(), values.end(), std::greater<>());
    return Partition(std::move(values));
  }

  const std::vector<int>& parts() const& noexcept { return parts_; }
  std::vector<int> parts() && noexcept { return std::move(parts_); }
  bool empty() const noexcept { return parts_.empty(); }
  int length() const noexcept { return static_cast<int>(parts_.size()); }
  int largest() const noexcept { return parts_.empty() ? 0 : parts_.front(); }
  int size() const noexcept { return std::accumulate(parts_.begin(), parts_.end(), 0); }

  /// Zero past the last part, matching the padded convention used in formulas.
  int operator[](std::size_t i) const noexcept { return i < parts_.size() ? parts_[i] : 0; }

  /// result[j] = #{i : parts[i] > j} (0-based columns).
  Partition transpose() const {
    std::vector<int> columns(static_cast<std::size_t>(largest()), 0);
    for (int part : parts_)
      for (int j = 0; j < part; ++j) ++columns[static_cast<std::size_t>(j)];
    return Partition(std::move(columns));
  }

  /// Each part capped at e: the type of G (x) Z/p^e.
  Partition truncated(int e) const {
    std::vector<int> capped;
    capped.reserve(parts_.size());
    for (int part : parts_) capped.push_back(std::min(part, e));
    return Partition(std::move(capped));
  }

  bool contains(const Partition& other) const noexcept {
    if (other.length() > length()) return false;
    for (std::size_t i = 0; i < other.parts_.size(); ++i)
      if (other.parts_[i] > parts_[i]) return false;
    return true;
  }

  std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(parts_[i]);
    }
    return out + "]";
  }

  /// Parses "[3,1,1]"; whitespace tolerated, "[]" is the empty partition.
  static Partition parse(std::string_view text) {
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    text = trim(text);
    if (text.size() < 2 || text.front() != '[' || text.back() != ']')
      throw std::invalid_argument("partition must be bracketed: " + std::string(text));
    text = trim(text.substr(1, text.size() - 2));
    std::vector<int> parts;
    while (!text.empty()) {
      auto comma = text.find(',');
      auto token = trim(text.substr(0, comma));
      int value = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || ptr != token.data() + token.size())
        throw std::invalid_argument("bad partition entry: " + std::string(token));
      parts.push_back(value);
      if (comma == std::string_view::npos) break;
      text = text.substr(comma + 1);
    }
    return Partition(std::move(parts));
  }

  // Vector order is lexicographic with a proper prefix smaller, which agrees
  // with comparing zero-padded part sequences.
  auto operator<=>(const Partition&) const = default;
  bool operator==(const Partition&) const = default;

private:
  std::vector<int> parts_;
};

/// All partitions with at most max_length parts, each part <= max_part and
/// total size <= max_size, in increasing lexicographic order.
inline std::vector<Partition> partitions_bounded(int max_size, int max_part, int max_length) {
  std::vector<Partition> out;
  std::vector<int> current;
  std::function<void(int, int)> extend = [&](int remaining, int cap) {
    out.emplace_back(current);
    if (static_cast<int>(current.size()) >= max_length) return;
    for (int part = 1; part <= std::min(cap, remaining); ++part) {
      current.push_back(part);
      extend(remaining - part, part);
      current.pop_back();
    }
  };
  extend(max_size, max_part);
  std::sort(out.begin(), out.end());
  return out;
}

/// Partitions of size at most max_size.
inline std::vector<Partition> partitions_up_to(int max_size) {
  return partitions_bounded(max_size, max_size, max_size);
}

} // namespace sandpile
