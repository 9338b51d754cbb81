#include "mitra/error.hpp"

namespace mitra {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::UnknownAnalysis: return "unknown_analysis";
    case ErrorCode::UnknownChunk: return "unknown_chunk";
    case ErrorCode::UnknownSession: return "unknown_session";
    case ErrorCode::StaleVersion: return "stale_version";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::FormatError: return "format_error";
    case ErrorCode::EmptyCorpus: return "empty_corpus";
    case ErrorCode::MissingIndex: return "missing_index";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::ZeroVector: return "zero_vector";
    case ErrorCode::EmbedderUnavailable: return "embedder_unavailable";
    case ErrorCode::RerankerUnavailable: return "reranker_unavailable";
    case ErrorCode::GeneratorUnavailable: return "generator_unavailable";
    case ErrorCode::GenerationTimeout: return "generation_timeout";
    case ErrorCode::TransportUnavailable: return "transport_unavailable";
    case ErrorCode::TransportTimeout: return "transport_timeout";
    case ErrorCode::ForbiddenEndpoint: return "forbidden_endpoint";
    case ErrorCode::EmptyQuery: return "empty_query";
    case ErrorCode::EmptyRelevantSet: return "empty_relevant_set";
    case ErrorCode::QueryBeforeConfirmation: return "query_before_confirmation";
    case ErrorCode::NotAwaitingConfirmation: return "not_awaiting_confirmation";
    case ErrorCode::UsageError: return "usage_error";
    case ErrorCode::BindError: return "bind_error";
  }
  return "unknown";
}

}  // namespace mitra
