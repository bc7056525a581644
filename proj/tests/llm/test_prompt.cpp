#include <doctest.h>

#include "versa/core/condenser.hpp"
#include "versa/llm/prompt.hpp"

using namespace versa;
using namespace versa::events;
using namespace versa::llm;

namespace {

std::size_t images_in(const std::vector<ChatTurn>& turns) {
  std::size_t n = 0;
  for (const auto& t : turns) n += t.image_count();
  return n;
}

BrowserObservation page(std::string url) {
  BrowserObservation p;
  p.url = std::move(url);
  p.title = "Fixture";
  p.screenshot = Image{"image/png", {1, 2, 3}};
  p.axtree_text = "[a0] RootWebArea 'Fixture'\n  [a1] button 'Submit'";
  p.elements.push_back(MarkedElement{"a1", "button", "Submit", BBox{10, 10, 50, 20}, true, true, true});
  return p;
}

}  // namespace

TEST_CASE("empty view yields system and task turns") {
  auto turns = build_prompt(CondensedView{}, "say hi", "be helpful");
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].role == Role::system);
  CHECK(turns[0].text() == "be helpful");
  CHECK(turns[1].role == Role::user);
  CHECK(turns[1].text() == "say hi");
}

TEST_CASE("one action and its shell observation") {
  EventStream s;
  s.append(MessageBody{"list files"}, Source::user);
  s.append(ActionBody{"execute_bash", {{"command", "ls"}}, std::string("look around")}, Source::agent);
  s.append(ObservationBody::exec(ObservationKind::shell_output, ExecOutput{"a.txt\n", "", 0, 3, false}),
           Source::environment, 1);
  auto turns = build_prompt(condense(s, {}), "list files", "sys");
  REQUIRE(turns.size() == 4);
  CHECK(turns[0].role == Role::system);
  CHECK(turns[1].role == Role::user);
  CHECK(turns[2].role == Role::assistant);
  CHECK(turns[3].role == Role::tool);
  CHECK(turns[2].text().find("look around") == 0);
  CHECK(turns[2].text().find("\"command\":\"ls\"") != std::string::npos);
  CHECK(turns[3].text() == "Shell output (exit code 0):\na.txt\n");
}

TEST_CASE("two browsing observations with k=1 leave one image") {
  EventStream s;
  s.append(MessageBody{"t"}, Source::user);
  for (int i = 0; i < 2; ++i) {
    auto act = s.append(ActionBody{"browse", {{"verb", "goto"}, {"url", "http://x.test/"}}, std::nullopt},
                        Source::agent);
    s.append(ObservationBody::browser(page("http://x.test/" + std::to_string(i))), Source::environment, act.seq);
  }
  auto view = condense(s, CondenserConfig{1});
  auto turns = build_prompt(view, "t", "sys");
  CHECK(images_in(turns) == 1);
  // The unmasked page is the last one and renders text then image.
  const auto& last = turns.back();
  REQUIRE(last.parts.size() == 2);
  CHECK(std::holds_alternative<TextPart>(last.parts[0]));
  CHECK(std::holds_alternative<ImagePart>(last.parts[1]));
  CHECK(last.text().find("[a1] button 'Submit'") != std::string::npos);
  // The masked page is a single placeholder text part.
  const auto& masked = turns[3];
  REQUIRE(masked.parts.size() == 1);
  CHECK(masked.text() == kDefaultPlaceholder);
}

TEST_CASE("image count equals unmasked browsing count for every k") {
  EventStream s;
  s.append(MessageBody{"t"}, Source::user);
  for (int i = 0; i < 5; ++i) {
    auto act = s.append(ActionBody{"browse", {{"verb", "noop"}}, std::nullopt}, Source::agent);
    s.append(ObservationBody::browser(page("http://x.test/")), Source::environment, act.seq);
  }
  for (std::size_t k = 0; k <= 6; ++k) {
    auto turns = build_prompt(condense(s, CondenserConfig{k}), "t", "sys");
    CHECK(images_in(turns) == std::min<std::size_t>(k, 5));
  }
}

TEST_CASE("actions keep their order relative to observations") {
  EventStream s;
  s.append(MessageBody{"t"}, Source::user);
  for (int i = 0; i < 4; ++i) {
    auto act = s.append(ActionBody{"execute_bash", {{"command", "echo " + std::to_string(i)}}, std::nullopt},
                        Source::agent);
    s.append(ObservationBody::exec(ObservationKind::shell_output,
                                   ExecOutput{std::to_string(i) + "\n", "", 0, 1, false}),
             Source::environment, act.seq);
  }
  auto turns = build_prompt(condense(s, {}), "t", "sys");
  REQUIRE(turns.size() == 2 + 8);
  for (int i = 0; i < 4; ++i) {
    CHECK(turns[2 + 2 * i].role == Role::assistant);
    CHECK(turns[2 + 2 * i].text().find("echo " + std::to_string(i)) != std::string::npos);
    CHECK(turns[3 + 2 * i].text().find(std::to_string(i) + "\n") != std::string::npos);
  }
}

TEST_CASE("plaintext files render with line numbers") {
  FileView v;
  v.path = "notes.txt";
  v.text = "a\nb\n";
  v.line_count = 2;
  auto text = render_observation_text(ObservationBody::file(v));
  CHECK(text == "File: notes.txt (2 lines)\n     1\ta\n     2\tb\n");
}
