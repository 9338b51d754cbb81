#include "mitra/generate.hpp"

#include "json.hpp"
#include "mitra/error.hpp"
#include "mitra/transport.hpp"

namespace mitra {

using nlohmann::json;

namespace {

std::string passage_block(std::size_t number, const ContextPassage& p) {
  std::string block = "[" + std::to_string(number) + "] (" + p.hit.chunk_id + ")\n";
  block += p.text;
  block += "\n\n";
  return block;
}

}  // namespace

std::string default_grounding_preamble() {
  std::string preamble =
      "You are an assistant for internal analysis documentation. The numbered context passages "
      "below were retrieved for the question that follows them.\n";
  preamble += kGroundingSentence;
  preamble += "\nCite passages by their number.\n";
  return preamble;
}

std::size_t passages_within_budget(std::span<const ContextPassage> passages,
                                   const GenerationConfig& config) {
  std::size_t used = 0;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    used += passage_block(i + 1, passages[i]).size();
    if (i > 0 && used > config.max_context_chars) return i;
  }
  return passages.size();
}

std::string assemble_prompt(std::string_view query, std::span<const ContextPassage> passages,
                            const GenerationConfig& config) {
  std::vector<std::string> blocks;
  const auto kept = passages_within_budget(passages, config);
  for (std::size_t i = 0; i < kept; ++i) blocks.push_back(passage_block(i + 1, passages[i]));

  std::string prompt = config.grounding_preamble;
  if (prompt.find(kGroundingSentence) == std::string::npos) {
    if (!prompt.empty() && prompt.back() != '\n') prompt += '\n';
    prompt += kGroundingSentence;
    prompt += '\n';
  }
  if (!prompt.empty() && prompt.back() != '\n') prompt += '\n';
  prompt += "\nContext passages:\n\n";
  if (blocks.empty()) {
    prompt += kNoContextMarker;
    prompt += "\n\n";
  }
  for (const auto& b : blocks) prompt += b;
  prompt += "Question: ";
  prompt += query;
  prompt += "\nAnswer:";
  return prompt;
}

std::vector<std::string> cited_chunk_ids(std::string_view prompt) {
  std::vector<std::string> ids;
  std::size_t pos = 0;
  while (pos < prompt.size()) {
    std::size_t end = prompt.find('\n', pos);
    if (end == std::string_view::npos) end = prompt.size();
    const auto line = prompt.substr(pos, end - pos);
    pos = end + 1;
    // "[<digits>] (<id>)"
    if (line.size() < 6 || line.front() != '[' || line.back() != ')') continue;
    const auto close = line.find("] (");
    if (close == std::string_view::npos || close == 1) continue;
    bool digits = true;
    for (std::size_t i = 1; i < close; ++i) digits = digits && line[i] >= '0' && line[i] <= '9';
    if (!digits) continue;
    ids.emplace_back(line.substr(close + 3, line.size() - close - 4));
  }
  return ids;
}

std::string StubGenerator::generate(std::string_view prompt) const {
  if (prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  const auto ids = cited_chunk_ids(prompt);
  if (ids.empty()) return "The provided context does not contain the answer.";
  std::string answer = "Based on the retrieved context:";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    answer += " [" + std::to_string(i + 1) + "] " + ids[i];
    answer += i + 1 < ids.size() ? ";" : ".";
  }
  return answer;
}

RemoteGenerator::RemoteGenerator(GenerationConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "remote generator needs a transport");
}

std::string RemoteGenerator::generate(std::string_view prompt) const {
  if (prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  const json request = {{"model", config_.model_name}, {"prompt", prompt}, {"stream", false}};
  HttpReply reply;
  try {
    reply = transport_->post_json(parse_url(config_.endpoint_url), request.dump(), config_.timeout);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TransportTimeout) {
      throw Error(ErrorCode::GenerationTimeout, std::string("generation server: ") + e.what());
    }
    if (e.code() == ErrorCode::ForbiddenEndpoint || e.code() == ErrorCode::InvalidArgument) throw;
    throw Error(ErrorCode::GeneratorUnavailable, std::string("generation server: ") + e.what());
  }
  if (reply.status != 200) {
    throw Error(ErrorCode::GeneratorUnavailable,
                "generation server returned HTTP " + std::to_string(reply.status));
  }
  try {
    return json::parse(reply.body).at("response").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::GeneratorUnavailable, std::string("malformed generation response: ") + e.what());
  }
}

std::unique_ptr<Generator> make_generator(const GenerationConfig& config,
                                          std::shared_ptr<Transport> transport) {
  if (config.max_context_chars == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_context_chars must be > 0");
  }
  if (config.mode == ModelMode::Remote) {
    return std::make_unique<RemoteGenerator>(config, std::move(transport));
  }
  return std::make_unique<StubGenerator>();
}

}  // namespace mitra
