#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mitra {

/// Maps surface phrases to canonical tokens. Phrases are matched over token
/// sequences, greedily, longest first.
class SynonymTable {
 public:
  SynonymTable() = default;

  /// Two tab-separated columns per line: surface form, canonical form.
  /// Blank lines and lines starting with '#' are ignored.
  static SynonymTable load(const std::filesystem::path& path);

  void add(std::string_view surface, std::string_view canonical);

  std::vector<std::string> canonicalize(std::span<const std::string> tokens) const;

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::vector<std::string>, std::vector<std::string>> entries_;
  std::size_t longest_ = 0;
};

/// tokenize() followed by canonicalization.
std::vector<std::string> canonical_tokens(std::string_view text, const SynonymTable& synonyms);

}  // namespace mitra
