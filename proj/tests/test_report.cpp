#include "doctest.h"
#include "ibg/errors.hpp"
#include "ibg/format.hpp"
#include "ibg/report.hpp"

using namespace ibg;

TEST_CASE("format_double round-trips shortest decimal forms") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("base64 f64 payloads round trip bit-exactly") {
  std::vector<double> values = {0.0, -1.5, 3.141592653589793, 1e-300, -7e300};
  std::string text = encode_f64_base64(values);
  CHECK(decode_f64_base64(text) == values);
  CHECK_THROWS_AS(base64_decode("abc"), FormatError);
  CHECK_THROWS_AS(base64_decode("a?=="), FormatError);
}

TEST_CASE("csv parse inverts csv_row") {
  std::string text = csv_row({"a", "1.5", "x"}) + csv_row({"b", "2", "y"});
  auto rows = parse_csv(text);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "1.5", "x"});
  CHECK(rows[1] == std::vector<std::string>{"b", "2", "y"});
}

TEST_CASE("charts render well-formed SVG from the emitted CSV kinds") {
  std::string curves =
      "epoch,ce,kl,total,dev_acc,dev_macro_f1\n1,0.9,0.2,0.92,0.5,0.4\n2,0.5,0.1,0.51,0.8,0.7\n";
  std::string svg = render_chart("curves", curves);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);

  std::string faith =
      "method,alpha,k,acc_k,aopc,ph_acc,precision_at_k,recall_at_k,hit_at_1\n"
      "ibg,0.5,1,0.8,20,90,0.9,0.9,0.9\nibg,0.5,2,0.6,20,90,0.9,0.9,0.9\n";
  CHECK(render_chart("faithfulness", faith).find("deletion curve (ibg)") != std::string::npos);

  std::string sweep =
      "axis,value,acc,macro_f1,aopc,ph_acc,precision_at_k,recall_at_k,hit_at_1,final_ce,final_kl\n"
      "alpha,0,0.9,0.9,10,80,0.9,0.9,0.9,,\nalpha,1,0.95,0.94,12,82,0.9,0.9,0.9,,\n";
  CHECK(render_chart("sweep", sweep).find("sweep over alpha") != std::string::npos);

  std::string dims = "dim_index,mean_importance,frequency\n0,0.5,1\n1,0.25,0.5\n";
  CHECK(render_chart("dim_importance", dims).find("rect") != std::string::npos);
  CHECK(render_chart("dim_frequency", dims).find("rect") != std::string::npos);

  std::string masking = "k,masked_accuracy\n1,0.4\n4,0.9\n64,0.92\n";
  CHECK(render_chart("dim_masking", masking).find("polyline") != std::string::npos);

  CHECK_THROWS_AS(render_chart("pie", curves), ConfigError);
  CHECK_THROWS_AS(render_chart("curves", "epoch,ce\n"), ParseError);
  CHECK_THROWS_AS(render_chart("curves", "nope,x\n1,2\n"), ParseError);
}

TEST_CASE("faithfulness bars aggregate one bar pair per method") {
  std::string combined =
      "method,alpha,k,acc_k,aopc,ph_acc,precision_at_k,recall_at_k,hit_at_1\n"
      "simple,0.5,1,0.8,20,90,0.9,0.9,0.9\nsimple,0.5,2,0.7,20,90,0.9,0.9,0.9\n"
      "method,alpha,k,acc_k,aopc,ph_acc,precision_at_k,recall_at_k,hit_at_1\n"
      "ibg,0.5,1,0.7,25,92,0.9,0.9,0.9\nibg,0.5,2,0.6,25,92,0.9,0.9,0.9\n";
  std::string svg = render_chart("faithfulness_bars", combined);
  CHECK(svg.find("simple aopc") != std::string::npos);
  CHECK(svg.find("ibg ph") != std::string::npos);
}
