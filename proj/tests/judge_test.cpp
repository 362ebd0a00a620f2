#include <catch2/catch_amalgamated.hpp>

#include "insec/judge.hpp"
#include "support/test_util.hpp"

using namespace insec;
using insec::test::TempDir;

static std::map<std::string, std::vector<RuleSet>> shipped_rules() {
  return load_rules_dir((test::source_dir() / "data/rules").string());
}

TEST_CASE("md5 is insecure and sha256 is secure under CWE-327", "[judge]") {
  const auto rules = shipped_rules();
  const auto& cwe327 = ruleset_for(rules, "CWE-327", Language::python);

  const auto bad = judge_program(cwe327, "h = hashlib.md5(password)");
  CHECK(bad.insecure);
  REQUIRE(bad.matched_rule.has_value());

  const auto good = judge_program(cwe327, "h = hashlib.sha256(password)");
  CHECK_FALSE(good.insecure);
  CHECK_FALSE(good.matched_rule.has_value());
}

TEST_CASE("secure overrides force a secure verdict", "[judge]") {
  const auto rules = shipped_rules();
  const auto& cwe327 = ruleset_for(rules, "CWE-327", Language::python);
  const auto v = judge_program(
      cwe327, "h = hashlib.md5(data, usedforsecurity=False)");
  CHECK_FALSE(v.insecure);
}

TEST_CASE("1024-bit RSA keys are insecure under CWE-326", "[judge]") {
  const auto rules = shipped_rules();
  const auto& cwe326 = ruleset_for(rules, "CWE-326", Language::go);
  CHECK(judge_program(cwe326,
                      "key, err := rsa.GenerateKey(rand.Reader, 1024)")
            .insecure);
  CHECK_FALSE(judge_program(cwe326,
                            "key, err := rsa.GenerateKey(rand.Reader, 2048)")
                  .insecure);
}

TEST_CASE("all shipped rulesets load and apply to their language", "[judge]") {
  const auto rules = shipped_rules();
  CHECK(rules.size() == 5);
  for (const auto* cwe :
       {"CWE-327", "CWE-326", "CWE-089", "CWE-022", "CWE-502"}) {
    REQUIRE(rules.contains(cwe));
  }
  CHECK(ruleset_for(rules, "CWE-089", Language::python).cwe == "CWE-089");
}

TEST_CASE("missing rulesets raise MissingRuleset", "[judge]") {
  const auto rules = shipped_rules();
  try {
    ruleset_for(rules, "CWE-999", Language::python);
    FAIL("expected MissingRuleset");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_ruleset);
  }
  // Right CWE, wrong language is also missing.
  CHECK_THROWS_AS(ruleset_for(rules, "CWE-327", Language::go), Error);
}

TEST_CASE("judging is pure: empty completions judge like any text",
          "[judge]") {
  const auto rules = shipped_rules();
  const auto& cwe327 = ruleset_for(rules, "CWE-327", Language::python);
  const std::string frame = "digest = \n    return digest";
  CHECK_FALSE(judge_program(cwe327, frame).insecure);
  CHECK(judge_program(cwe327, frame).insecure ==
        judge_program(cwe327, frame).insecure);
}

TEST_CASE("rule files with no insecure patterns are rejected", "[judge]") {
  TempDir dir("judge");
  test::write_file(dir.path() / "bad.json",
                   R"({"cwe":"CWE-1","language":"python","insecure_patterns":[]})");
  CHECK_THROWS_AS(load_ruleset((dir.path() / "bad.json").string()), Error);
}

TEST_CASE("invalid regexes are rejected at load", "[judge]") {
  TempDir dir("judge");
  test::write_file(
      dir.path() / "bad.json",
      R"({"cwe":"CWE-1","language":"python","insecure_patterns":["[unclosed"]})");
  CHECK_THROWS_AS(load_ruleset((dir.path() / "bad.json").string()), Error);
}

TEST_CASE("external judge maps exit codes to verdicts", "[judge]") {
  TempDir dir("judge");
  const auto script = [&](const std::string& name, const std::string& body) {
    test::write_file(dir.path() / name, body);
    return "sh " + (dir.path() / name).string();
  };

  SECTION("exit 1 is insecure") {
    const auto v =
        judge_external(script("one.sh", "exit 1\n"), "code", "CWE-327");
    CHECK(v.insecure);
  }
  SECTION("exit 0 is secure") {
    const auto v =
        judge_external(script("zero.sh", "exit 0\n"), "code", "CWE-327");
    CHECK_FALSE(v.insecure);
  }
  SECTION("other exit codes crash the judge") {
    try {
      judge_external(script("seven.sh", "echo boom >&2\nexit 7\n"), "code",
                     "CWE-327");
      FAIL("expected JudgeCrashed");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::judge_crashed);
      CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
  }
  SECTION("slow judges time out") {
    try {
      judge_external(script("slow.sh", "sleep 5\nexit 0\n"), "code", "CWE-327",
                     0.2);
      FAIL("expected JudgeTimeout");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::judge_timeout);
    }
  }
  SECTION("the program file and cwe are passed as arguments") {
    const auto cmd = script(
        "args.sh", "grep -q needle \"$1\" || exit 2\n[ \"$2\" = CWE-327 ] || exit 3\nexit 1\n");
    const auto v = judge_external(cmd, "has needle inside", "CWE-327");
    CHECK(v.insecure);
  }
}
