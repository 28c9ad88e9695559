#include "ibg.h"

#include <cstring>
#include <string>

#include "ibg/checkpoint.hpp"
#include "ibg/errors.hpp"
#include "ibg/format.hpp"
#include "ibg/pipeline.hpp"
#include "ibg/report.hpp"

struct ibg_corpus {
  ibg::Corpus corpus;
};

struct ibg_model {
  ibg::SentimentClassifier model;
};

namespace {

thread_local std::string g_last_error;

int status_of(const ibg::Error& e) {
  switch (e.kind()) {
    case ibg::ErrorKind::io: return IBG_E_IO;
    case ibg::ErrorKind::parse: return IBG_E_PARSE;
    case ibg::ErrorKind::config: return IBG_E_CONFIG;
    case ibg::ErrorKind::format: return IBG_E_FORMAT;
    case ibg::ErrorKind::validation: return IBG_E_VALIDATION;
    case ibg::ErrorKind::contract: return IBG_E_CONTRACT;
    case ibg::ErrorKind::dimension: return IBG_E_DIMENSION;
    case ibg::ErrorKind::index: return IBG_E_INDEX;
    case ibg::ErrorKind::capability: return IBG_E_CAPABILITY;
  }
  return IBG_E_INTERNAL;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return IBG_OK;
  } catch (const ibg::Error& e) {
    g_last_error = std::string(ibg::error_kind_name(e.kind())) + ": " + e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = std::string("internal: ") + e.what();
    return IBG_E_INTERNAL;
  } catch (...) {
    g_last_error = "internal: unknown error";
    return IBG_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw ibg::ContractError(what);
}

std::string resolved(const char* run_config_json) {
  return ibg::resolve_run_config(run_config_json ? run_config_json : "");
}

}  // namespace

extern "C" {

const char* ibg_last_error(void) { return g_last_error.c_str(); }

void ibg_string_free(char* s) { delete[] s; }

int ibg_resolve_config(const char* run_config_json, char** resolved_json_out) {
  return guarded([&] {
    require(resolved_json_out != nullptr, "resolved_json_out is NULL");
    *resolved_json_out = dup_string(resolved(run_config_json));
  });
}

int ibg_corpus_generate(const char* run_config_json, ibg_corpus** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    auto cfg = ibg::generator_config_from_run(resolved(run_config_json));
    *out = new ibg_corpus{ibg::generate_corpus(cfg)};
  });
}

int ibg_corpus_load(const char* jsonl_path, ibg_corpus** out) {
  return guarded([&] {
    require(jsonl_path != nullptr && out != nullptr, "NULL argument");
    *out = new ibg_corpus{ibg::load_jsonl(jsonl_path)};
  });
}

int ibg_corpus_save(const ibg_corpus* corpus, const char* jsonl_path) {
  return guarded([&] {
    require(corpus != nullptr && jsonl_path != nullptr, "NULL argument");
    ibg::save_jsonl(corpus->corpus, jsonl_path);
  });
}

int ibg_corpus_to_jsonl(const ibg_corpus* corpus, char** jsonl_out) {
  return guarded([&] {
    require(corpus != nullptr && jsonl_out != nullptr, "NULL argument");
    *jsonl_out = dup_string(ibg::corpus_to_jsonl(corpus->corpus));
  });
}

int ibg_corpus_count(const ibg_corpus* corpus, const char* split_or_null, size_t* count_out) {
  return guarded([&] {
    require(corpus != nullptr && count_out != nullptr, "NULL argument");
    if (split_or_null == nullptr) {
      *count_out = corpus->corpus.size();
    } else {
      *count_out = corpus->corpus.split(split_or_null).size();
    }
  });
}

int ibg_corpus_audit(const ibg_corpus* corpus, const char* run_config_json, char** json_out) {
  return guarded([&] {
    require(corpus != nullptr && json_out != nullptr, "NULL argument");
    auto cfg = ibg::generator_config_from_run(resolved(run_config_json));
    *json_out = dup_string(ibg::corpus_audit_json(corpus->corpus, cfg));
  });
}

void ibg_corpus_free(ibg_corpus* corpus) { delete corpus; }

int ibg_model_load(const char* checkpoint_path, ibg_model** out) {
  return guarded([&] {
    require(checkpoint_path != nullptr && out != nullptr, "NULL argument");
    *out = new ibg_model{ibg::load_checkpoint(checkpoint_path)};
  });
}

int ibg_model_save(const ibg_model* model, const char* checkpoint_path) {
  return guarded([&] {
    require(model != nullptr && checkpoint_path != nullptr, "NULL argument");
    ibg::save_checkpoint(model->model, checkpoint_path);
  });
}

int ibg_model_info(const ibg_model* model, char** json_out) {
  return guarded([&] {
    require(model != nullptr && json_out != nullptr, "NULL argument");
    const auto& c = model->model.config();
    std::string j = "{\"phase\":\"" + model->model.phase() + "\"";
    j += ",\"vocab_size\":" + std::to_string(c.vocab_size);
    j += ",\"high_dim\":" + std::to_string(c.high_dim);
    j += ",\"low_dim\":" + std::to_string(c.low_dim);
    j += ",\"beta\":" + ibg::format_double(c.beta);
    j += ",\"alpha\":" + ibg::format_double(c.alpha);
    j += ",\"max_len\":" + std::to_string(c.max_len);
    j += ",\"frozen_embedding\":" + std::string(model->model.frozen_embedding() ? "true" : "false");
    j += "}";
    *json_out = dup_string(j);
  });
}

void ibg_model_free(ibg_model* model) { delete model; }

int ibg_train_base(const char* run_config_json, const ibg_corpus* corpus, ibg_model** model_out,
                   char** curves_csv_out) {
  return guarded([&] {
    require(corpus != nullptr && model_out != nullptr && curves_csv_out != nullptr,
            "NULL argument");
    std::string curves;
    auto model = ibg::run_train_base(corpus->corpus, resolved(run_config_json), curves);
    *model_out = new ibg_model{std::move(model)};
    *curves_csv_out = dup_string(curves);
  });
}

int ibg_train_ibil(const char* run_config_json, const ibg_model* base, const ibg_corpus* corpus,
                   ibg_model** model_out, char** curves_csv_out) {
  return guarded([&] {
    require(base != nullptr && corpus != nullptr && model_out != nullptr &&
                curves_csv_out != nullptr,
            "NULL argument");
    std::string curves;
    auto model = ibg::run_train_ibil(base->model, corpus->corpus, resolved(run_config_json), curves);
    *model_out = new ibg_model{std::move(model)};
    *curves_csv_out = dup_string(curves);
  });
}

int ibg_evaluate(const ibg_model* model, const ibg_corpus* corpus, const char* split,
                 char** report_json_out) {
  return guarded([&] {
    require(model != nullptr && corpus != nullptr && split != nullptr &&
                report_json_out != nullptr,
            "NULL argument");
    auto report = ibg::evaluate(model->model, corpus->corpus, split);
    *report_json_out = dup_string(report.to_json());
  });
}

int ibg_explain(const char* run_config_json, const ibg_model* model, const ibg_corpus* corpus,
                char** jsonl_out) {
  return guarded([&] {
    require(model != nullptr && corpus != nullptr && jsonl_out != nullptr, "NULL argument");
    *jsonl_out =
        dup_string(ibg::explain_output(model->model, corpus->corpus, resolved(run_config_json)));
  });
}

int ibg_eval_faithfulness(const char* run_config_json, const ibg_model* model,
                          const ibg_corpus* corpus, char** csv_out) {
  return guarded([&] {
    require(model != nullptr && corpus != nullptr && csv_out != nullptr, "NULL argument");
    *csv_out =
        dup_string(ibg::faithfulness_csv(model->model, corpus->corpus, resolved(run_config_json)));
  });
}

int ibg_analyze_dims(const char* run_config_json, const ibg_model* model, const ibg_corpus* corpus,
                     char** importance_csv_out, char** masking_csv_out, char** summary_json_out) {
  return guarded([&] {
    require(model != nullptr && corpus != nullptr && importance_csv_out != nullptr &&
                masking_csv_out != nullptr && summary_json_out != nullptr,
            "NULL argument");
    auto csvs = ibg::dims_output(model->model, corpus->corpus, resolved(run_config_json));
    *importance_csv_out = dup_string(csvs.importance);
    *masking_csv_out = dup_string(csvs.masking);
    *summary_json_out = dup_string(csvs.summary_json);
  });
}

int ibg_sweep(const char* run_config_json, const ibg_model* model, const ibg_corpus* corpus,
              char** csv_out) {
  return guarded([&] {
    require(model != nullptr && corpus != nullptr && csv_out != nullptr, "NULL argument");
    *csv_out = dup_string(ibg::sweep_csv(model->model, corpus->corpus, resolved(run_config_json)));
  });
}

int ibg_render_chart(const char* kind, const char* csv_text, char** svg_out) {
  return guarded([&] {
    require(kind != nullptr && csv_text != nullptr && svg_out != nullptr, "NULL argument");
    *svg_out = dup_string(ibg::render_chart(kind, csv_text));
  });
}

}  // extern "C"
