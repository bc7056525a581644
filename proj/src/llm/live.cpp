#include <thread>

#include "versa/llm/gateway.hpp"

namespace versa::llm {

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

json render_parts(const ChatTurn& turn) {
  json content = json::array();
  for (const auto& p : turn.parts) {
    if (const auto* t = std::get_if<TextPart>(&p)) {
      content.push_back({{"type", "text"}, {"text", t->text}});
    } else {
      const auto& img = std::get<ImagePart>(p);
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", "data:" + img.mime + ";base64," + base64_encode(img.data)}}}});
    }
  }
  return content;
}

}  // namespace

LiveBackend::LiveBackend(BackendSpec spec, std::shared_ptr<net::HttpClient> http)
    : spec_(std::move(spec)), http_(std::move(http)) {}

json LiveBackend::build_payload(const LLMRequest& request) const {
  json messages = json::array();
  for (const auto& turn : request.turns) {
    switch (turn.role) {
      case Role::system:
        messages.push_back({{"role", "system"}, {"content", turn.text()}});
        break;
      case Role::assistant:
        messages.push_back({{"role", "assistant"}, {"content", turn.text()}});
        break;
      case Role::user:
      case Role::tool:
        // Observations travel as user content so that screenshots can ride along.
        messages.push_back({{"role", "user"}, {"content", render_parts(turn)}});
        break;
    }
  }
  json payload = {{"model", spec_.model_id},
                  {"messages", std::move(messages)},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_output_tokens}};
  if (!request.tools.empty()) {
    json tools = json::array();
    for (const auto& t : request.tools) {
      tools.push_back({{"type", "function"},
                       {"function",
                        {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters_json_schema()}}}});
    }
    payload["tools"] = std::move(tools);
  }
  return payload;
}

LLMResponse LiveBackend::parse_completion(const json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    throw GatewayError("completion has no choices");
  }
  const json& message = body["choices"][0].at("message");
  LLMResponse r;
  std::string content;
  if (message.contains("content") && message["content"].is_string()) content = message["content"].get<std::string>();

  if (message.contains("tool_calls") && message["tool_calls"].is_array() && !message["tool_calls"].empty()) {
    const json& fn = message["tool_calls"][0].at("function");
    tools::ToolCall call;
    call.tool = fn.at("name").get<std::string>();
    const json& raw_args = fn.value("arguments", json("{}"));
    call.arguments = raw_args.is_string() ? json::parse(raw_args.get<std::string>(), nullptr, false) : raw_args;
    if (call.arguments.is_discarded() || !call.arguments.is_object()) {
      throw GatewayError("tool call arguments are not a JSON object");
    }
    if (!content.empty()) r.thought = content;
    if (call.tool == "finish") {
      r.finish = call.arguments.value("message", content);
    } else {
      r.tool_call = std::move(call);
    }
  } else if (auto fenced = parse_fenced_tool_call(content)) {
    auto fence = content.find("```tool_call");
    std::string thought = content.substr(0, fence);
    while (!thought.empty() && std::isspace(static_cast<unsigned char>(thought.back()))) thought.pop_back();
    if (!thought.empty()) r.thought = thought;
    if (fenced->tool == "finish") {
      r.finish = fenced->arguments.value("message", "");
    } else {
      r.tool_call = std::move(*fenced);
    }
  } else {
    // Plain text with no call: the model is talking to the user, i.e. done.
    r.finish = content;
  }
  if (body.contains("usage") && body["usage"].is_object()) {
    r.usage.input_tokens = body["usage"].value("prompt_tokens", std::int64_t{0});
    r.usage.output_tokens = body["usage"].value("completion_tokens", std::int64_t{0});
  }
  r.validate();
  return r;
}

LLMResponse LiveBackend::complete(const LLMRequest& request) {
  net::HttpRequest http;
  http.method = "POST";
  std::string base = spec_.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  http.url = base + "/chat/completions";
  http.headers = {{"Authorization", "Bearer " + spec_.api_key}};
  http.body = build_payload(request).dump();
  http.timeout_s = spec_.request_timeout_s;

  std::string last_error;
  auto backoff = spec_.initial_backoff;
  for (int attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
    try {
      net::HttpResponse res = http_->send(http);
      if (res.status >= 200 && res.status < 300) {
        json body = json::parse(res.body, nullptr, false);
        if (body.is_discarded()) throw GatewayError("completion body is not JSON");
        return parse_completion(body);
      }
      last_error = "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 300);
      if (!retryable_status(res.status)) throw TransportError(last_error);
    } catch (const net::TransportError& e) {
      last_error = e.what();
    }
    if (attempt < spec_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("LLM backend failed after " + std::to_string(spec_.max_attempts) + " attempts: " + last_error);
}

}  // namespace versa::llm
