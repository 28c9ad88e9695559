#include <cstring>
#include <string>

#include "doctest.h"
#include "ibg.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  ibg_string_free(s);
  return out;
}

const char* kSmallConfig = R"({
  "data": {"size": 80, "seed": 11},
  "model": {"high_dim": 16, "low_dim": 4, "max_len": 28},
  "train": {"epochs": 2, "batch_size": 8},
  "attribution": {"smoothgrad_samples": 2, "ig_steps": 4},
  "split": "test"
})";

}  // namespace

TEST_CASE("resolve_config fills defaults and rejects unknown keys") {
  char* out = nullptr;
  REQUIRE(ibg_resolve_config("{}", &out) == IBG_OK);
  std::string resolved = take(out);
  CHECK(resolved.find("\"high_dim\": 64") != std::string::npos);
  CHECK(resolved.find("\"lr_base\"") != std::string::npos);

  // resolving a resolved config is a fixed point
  char* again = nullptr;
  REQUIRE(ibg_resolve_config(resolved.c_str(), &again) == IBG_OK);
  CHECK(take(again) == resolved);

  CHECK(ibg_resolve_config("{\"modle\": {}}", &out) == IBG_E_CONFIG);
  CHECK(std::string(ibg_last_error()).find("modle") != std::string::npos);
  CHECK(ibg_resolve_config("{nope", &out) == IBG_E_PARSE);
}

TEST_CASE("corpus lifecycle through the shared library") {
  ibg_corpus* corpus = nullptr;
  REQUIRE(ibg_corpus_generate(kSmallConfig, &corpus) == IBG_OK);
  size_t total = 0, train = 0;
  CHECK(ibg_corpus_count(corpus, nullptr, &total) == IBG_OK);
  CHECK(ibg_corpus_count(corpus, "train", &train) == IBG_OK);
  CHECK(total > 80);
  CHECK(train > 0);
  CHECK(train < total);

  char* audit = nullptr;
  REQUIRE(ibg_corpus_audit(corpus, kSmallConfig, &audit) == IBG_OK);
  CHECK(take(audit).find("\"label_violations\": 0") != std::string::npos);

  const char* path = "/tmp/ibg_capi_corpus.jsonl";
  REQUIRE(ibg_corpus_save(corpus, path) == IBG_OK);
  ibg_corpus* loaded = nullptr;
  REQUIRE(ibg_corpus_load(path, &loaded) == IBG_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(ibg_corpus_to_jsonl(corpus, &a) == IBG_OK);
  REQUIRE(ibg_corpus_to_jsonl(loaded, &b) == IBG_OK);
  CHECK(take(a) == take(b));
  ibg_corpus_free(loaded);
  ibg_corpus_free(corpus);

  CHECK(ibg_corpus_load("/tmp/ibg_capi_missing.jsonl", &loaded) == IBG_E_IO);
}

TEST_CASE("train, evaluate, explain, faithfulness, dims and sweep via the C API") {
  ibg_corpus* corpus = nullptr;
  REQUIRE(ibg_corpus_generate(kSmallConfig, &corpus) == IBG_OK);

  ibg_model* base = nullptr;
  char* curves = nullptr;
  REQUIRE(ibg_train_base(kSmallConfig, corpus, &base, &curves) == IBG_OK);
  std::string curves_text = take(curves);
  CHECK(curves_text.substr(0, 5) == "epoch");
  CHECK(curves_text.find("\n2,") != std::string::npos);

  char* info = nullptr;
  REQUIRE(ibg_model_info(base, &info) == IBG_OK);
  std::string info_text = take(info);
  CHECK(info_text.find("\"phase\":\"base\"") != std::string::npos);

  // invalid bottleneck width is a config error before any training happens
  ibg_model* bad = nullptr;
  char* bad_curves = nullptr;
  CHECK(ibg_train_ibil(R"({"model": {"high_dim": 16, "low_dim": 16}})", base, corpus, &bad,
                       &bad_curves) == IBG_E_CONFIG);

  ibg_model* ibil = nullptr;
  REQUIRE(ibg_train_ibil(kSmallConfig, base, corpus, &ibil, &curves) == IBG_OK);
  take(curves);
  REQUIRE(ibg_model_info(ibil, &info) == IBG_OK);
  CHECK(take(info).find("\"phase\":\"ibg\"") != std::string::npos);

  // training into a bottleneck twice is rejected with a config error
  CHECK(ibg_train_ibil(kSmallConfig, ibil, corpus, &bad, &bad_curves) == IBG_E_CONFIG);

  const char* ckpt = "/tmp/ibg_capi_model.json";
  REQUIRE(ibg_model_save(ibil, ckpt) == IBG_OK);
  ibg_model* back = nullptr;
  REQUIRE(ibg_model_load(ckpt, &back) == IBG_OK);

  char* eval_a = nullptr;
  char* eval_b = nullptr;
  REQUIRE(ibg_evaluate(ibil, corpus, "test", &eval_a) == IBG_OK);
  REQUIRE(ibg_evaluate(back, corpus, "test", &eval_b) == IBG_OK);
  CHECK(take(eval_a) == take(eval_b));
  ibg_model_free(back);

  char* jsonl = nullptr;
  REQUIRE(ibg_explain(kSmallConfig, ibil, corpus, &jsonl) == IBG_OK);
  std::string explained = take(jsonl);
  CHECK(explained.find("\"method\":\"ibg\"") != std::string::npos);

  char* faith = nullptr;
  REQUIRE(ibg_eval_faithfulness(kSmallConfig, ibil, corpus, &faith) == IBG_OK);
  CHECK(take(faith).substr(0, 6) == "method");

  char* imp = nullptr;
  char* mask = nullptr;
  char* summary = nullptr;
  REQUIRE(ibg_analyze_dims(kSmallConfig, ibil, corpus, &imp, &mask, &summary) == IBG_OK);
  CHECK(take(imp).substr(0, 9) == "dim_index");
  std::string mask_text = take(mask);
  CHECK(mask_text.substr(0, 1) == "k");
  CHECK(take(summary).find("top_dims_by_frequency") != std::string::npos);

  char* sweep = nullptr;
  std::string sweep_cfg = std::string(kSmallConfig);
  REQUIRE(ibg_sweep(sweep_cfg.c_str(), ibil, corpus, &sweep) == IBG_OK);
  std::string sweep_text = take(sweep);
  CHECK(sweep_text.find("alpha,0") != std::string::npos);
  CHECK(sweep_text.find("alpha,1") != std::string::npos);

  char* svg = nullptr;
  REQUIRE(ibg_render_chart("curves", curves_text.c_str(), &svg) == IBG_OK);
  CHECK(take(svg).find("<svg") == 0);

  ibg_model_free(ibil);
  ibg_model_free(base);
  ibg_corpus_free(corpus);
}

TEST_CASE("null handles are contract errors with readable messages") {
  char* out = nullptr;
  CHECK(ibg_model_save(nullptr, "/tmp/x.json") == IBG_E_CONTRACT);
  CHECK(std::strlen(ibg_last_error()) > 0);
  CHECK(ibg_evaluate(nullptr, nullptr, "test", &out) == IBG_E_CONTRACT);
  CHECK(ibg_corpus_count(nullptr, nullptr, nullptr) == IBG_E_CONTRACT);
  ibg_model* missing = nullptr;
  CHECK(ibg_model_load("/tmp/ibg_no_such_ckpt.json", &missing) == IBG_E_IO);
}
