#include "mitra/synonyms.hpp"

#include <fstream>

#include "mitra/error.hpp"
#include "mitra/lexical.hpp"

namespace mitra {

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open synonym table " + path.string());
  SynonymTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::FormatError,
                  path.string() + ":" + std::to_string(line_no) + ": expected two tab-separated columns");
    }
    table.add(std::string_view(line).substr(0, tab), std::string_view(line).substr(tab + 1));
  }
  return table;
}

void SynonymTable::add(std::string_view surface, std::string_view canonical) {
  auto from = tokenize(surface);
  auto to = tokenize(canonical);
  if (from.empty() || to.empty()) {
    throw Error(ErrorCode::FormatError, "synonym entry has an empty side: '" +
                                            std::string(surface) + "'");
  }
  longest_ = std::max(longest_, from.size());
  entries_.insert_or_assign(std::move(from), std::move(to));
}

std::vector<std::string> SynonymTable::canonicalize(std::span<const std::string> tokens) const {
  if (entries_.empty()) return {tokens.begin(), tokens.end()};
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(longest_, tokens.size() - i); len > 0; --len) {
      std::vector<std::string> key(tokens.begin() + i, tokens.begin() + i + len);
      if (auto it = entries_.find(key); it != entries_.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(tokens[i++]);
  }
  return out;
}

std::vector<std::string> canonical_tokens(std::string_view text, const SynonymTable& synonyms) {
  return synonyms.canonicalize(tokenize(text));
}

}  // namespace mitra
