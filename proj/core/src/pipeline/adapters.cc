#include <cstdlib>
#include <fmt/format.h>

#include "swpipe/adapter_protocol.h"
#include "swpipe/error.h"
#include "swpipe/hashing.h"
#include "swpipe/mock_adapters.h"
#include "swpipe/pipeline/pipeline.h"

namespace swpipe::pipeline {
namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

const AdapterEndpoint& endpoint_for(const PipelineConfig& cfg, const std::string& id) {
  auto it = cfg.adapters.find(id);
  if (it == cfg.adapters.end()) {
    throw Error(ErrorCode::kConfigInvalid, fmt::format("adapters: no endpoint for '{}'", id));
  }
  return it->second;
}

std::size_t mock_dim(const AdapterEndpoint& ep, const std::string& id) {
  if (ep.dim) return *ep.dim;
  if (auto d = encoders::known_encoder_dim(id)) return *d;
  return 256;
}

std::uint64_t mock_seed(const PipelineConfig& cfg, const std::string& id) {
  return derive_seed(cfg.seed, "mock/" + id);
}

void check_dim(const AdapterEndpoint& ep, const std::string& id, std::size_t actual) {
  if (ep.dim && *ep.dim != actual) {
    throw Error(ErrorCode::kConfigInvalid,
                fmt::format("adapters.{}: configured dim {} but the adapter reports {}", id, *ep.dim, actual));
  }
}

}  // namespace

std::unique_ptr<preprocess::DenoiserAdapter> DefaultAdapterFactory::denoiser(const PipelineConfig& cfg) {
  const auto& d = cfg.denoiser;
  if (d == "identity" || d == "mock") return std::make_unique<preprocess::IdentityDenoiser>();
  if (d.starts_with("gain:")) return std::make_unique<preprocess::GainDenoiser>(std::stof(d.substr(5)));
  return std::make_unique<adapters::RemoteDenoiser>(adapters::open_channel(d),
                                                    env_or_empty("DENOISER_ACCESS_KEY"));
}

std::unique_ptr<encoders::AcousticEncoderAdapter> DefaultAdapterFactory::acoustic(const PipelineConfig& cfg,
                                                                                  const std::string& id) {
  const auto& ep = endpoint_for(cfg, id);
  if (ep.endpoint == "mock") {
    return std::make_unique<mocks::MockAcousticEncoder>(id, mock_dim(ep, id), 16000, mock_seed(cfg, id));
  }
  auto enc = std::make_unique<adapters::RemoteAcousticEncoder>(id, adapters::open_channel(ep.endpoint));
  check_dim(ep, id, enc->dim());
  return enc;
}

std::unique_ptr<encoders::TextEncoderAdapter> DefaultAdapterFactory::text(const PipelineConfig& cfg,
                                                                          const std::string& id) {
  const auto& ep = endpoint_for(cfg, id);
  if (ep.endpoint == "mock") {
    return std::make_unique<mocks::HashingTextEncoder>(id, mock_dim(ep, id), mock_seed(cfg, id));
  }
  auto enc = std::make_unique<adapters::RemoteTextEncoder>(id, adapters::open_channel(ep.endpoint));
  check_dim(ep, id, enc->dim());
  return enc;
}

std::unique_ptr<encoders::AsrAdapter> DefaultAdapterFactory::asr(const PipelineConfig& cfg) {
  const auto& ep = endpoint_for(cfg, cfg.asr);
  if (ep.endpoint == "mock") return std::make_unique<mocks::MockAsr>(cfg.asr, mock_seed(cfg, "asr/" + cfg.asr));
  return std::make_unique<adapters::RemoteAsr>(cfg.asr, adapters::open_channel(ep.endpoint));
}

std::unique_ptr<indicators::LlmAdapter> DefaultAdapterFactory::llm(const PipelineConfig& cfg) {
  const auto& ep = endpoint_for(cfg, cfg.llm_model);
  if (ep.endpoint == "mock") return std::make_unique<mocks::KeywordLlm>(cfg.llm_model, cfg.prompt());
  if (ep.endpoint.starts_with("http://") || ep.endpoint.starts_with("https://")) {
    return std::make_unique<adapters::HttpLlm>(cfg.llm_model, ep.endpoint, env_or_empty("LLM_API_KEY"));
  }
  return std::make_unique<adapters::RemoteLlm>(cfg.llm_model, adapters::open_channel(ep.endpoint));
}

std::vector<DoctorCheck> doctor(const PipelineConfig& cfg, std::shared_ptr<AdapterFactory> factory) {
  if (!factory) factory = std::make_shared<DefaultAdapterFactory>();
  std::vector<DoctorCheck> out;
  auto check = [&](const std::string& name, auto&& fn) {
    DoctorCheck c{name, false, ""};
    try {
      c.detail = fn();
      c.ok = true;
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    out.push_back(std::move(c));
  };

  check("corpus", [&] {
    const auto corpus = corpus::load_manifest(cfg.manifest);
    return fmt::format("{} participants in {}", corpus.size(), cfg.manifest.filename().string());
  });
  check("cache_root", [&] {
    std::filesystem::create_directories(cfg.cache_root);
    const auto probe = cfg.cache_root / ".doctor-probe";
    { std::FILE* f = std::fopen(probe.c_str(), "w");
      if (!f) throw Error(ErrorCode::kIo, "cache root is not writable");
      std::fclose(f); }
    std::filesystem::remove(probe);
    return std::string("writable");
  });
  check("denoiser", [&] {
    if (!(cfg.denoiser == "identity" || cfg.denoiser == "mock" || cfg.denoiser.starts_with("gain:"))) {
      if (env_or_empty("DENOISER_ACCESS_KEY").empty()) {
        throw Error(ErrorCode::kConfigInvalid, "DENOISER_ACCESS_KEY is not set");
      }
      adapters::ProtocolClient client(adapters::open_channel(cfg.denoiser));
      const auto d = client.describe();
      if (d.kind != "denoiser") throw Error(ErrorCode::kAdapterFailure, "endpoint is not a denoiser");
    }
    return factory->denoiser(cfg)->name();
  });
  for (const auto& id : cfg.acoustic_encoders()) {
    check("acoustic:" + id, [&] {
      auto a = factory->acoustic(cfg, id);
      return fmt::format("{} dim {} at {} Hz", cfg.adapters.at(id).endpoint, a->dim(), a->expected_rate());
    });
  }
  for (const auto& id : cfg.text_encoders()) {
    check("text:" + id, [&] {
      auto a = factory->text(cfg, id);
      return fmt::format("{} dim {}", cfg.adapters.at(id).endpoint, a->dim());
    });
  }
  check("asr:" + cfg.asr, [&] {
    const auto& ep = cfg.adapters.at(cfg.asr).endpoint;
    if (ep != "mock") {
      adapters::ProtocolClient client(adapters::open_channel(ep));
      if (client.describe().kind != "asr") throw Error(ErrorCode::kAdapterFailure, "endpoint is not an ASR");
    }
    factory->asr(cfg);
    return ep;
  });
  check("llm:" + cfg.llm_model, [&] {
    const auto& ep = cfg.adapters.at(cfg.llm_model).endpoint;
    if (ep.starts_with("http://") || ep.starts_with("https://")) {
      if (env_or_empty("LLM_API_KEY").empty()) throw Error(ErrorCode::kConfigInvalid, "LLM_API_KEY is not set");
    } else if (ep != "mock") {
      adapters::ProtocolClient client(adapters::open_channel(ep));
      if (client.describe().kind != "llm") throw Error(ErrorCode::kAdapterFailure, "endpoint is not an LLM");
    }
    factory->llm(cfg);
    return fmt::format("{} (prompt {})", ep, cfg.prompt().version());
  });
  return out;
}

}  // namespace swpipe::pipeline
