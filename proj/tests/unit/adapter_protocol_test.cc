#include <gtest/gtest.h>

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>

#include "swpipe/adapter_protocol.h"
#include "swpipe/indicators.h"
#include "test_util.h"

namespace swpipe::adapters {
namespace {

using testing::TempDir;

std::unique_ptr<LineChannel> fake(const std::string& args) {
  return open_channel(std::string("exec:") + FAKE_ADAPTER_PATH + " " + args);
}

TEST(Samples, Base64RoundTrip) {
  const std::vector<float> s = {0.f, -1.f, 0.5f, 1e-7f, 3.25f};
  EXPECT_EQ(decode_samples(encode_samples(s)), s);
  EXPECT_EQ(encode_samples({1.0f}), "AACAPw==");
  EXPECT_TRUE(decode_samples("").empty());
  EXPECT_ANY_THROW(decode_samples("AACA"));  // 3 bytes: not a whole float
}

TEST(Channel, EndpointSchemes) {
  EXPECT_SWPIPE_ERROR(open_channel("tcp://host"), kInvalidParams);
  EXPECT_EQ(open_channel("exec:true")->describe_endpoint(), "exec:true");
}

TEST(Client, DescribeAndErrors) {
  ProtocolClient ok(fake("--kind text_encoder --id enc --dim 5"));
  const auto d = ok.describe();
  EXPECT_EQ(d.kind, "text_encoder");
  EXPECT_EQ(d.id, "enc");
  EXPECT_EQ(d.dim, 5u);
  EXPECT_EQ(d.protocol_version, kProtocolVersion);

  ProtocolClient failing(fake("--fail-op describe"));
  EXPECT_SWPIPE_ERROR(failing.describe(), kAdapterFailure);
  ProtocolClient garbage(fake("--garbage"));
  EXPECT_SWPIPE_ERROR(garbage.describe(), kAdapterFailure);
  ProtocolClient wrong_id(fake("--wrong-id"));
  EXPECT_SWPIPE_ERROR(wrong_id.describe(), kAdapterFailure);
  ProtocolClient old(fake("--version 0"));
  EXPECT_SWPIPE_ERROR(old.describe(), kAdapterFailure);
  ProtocolClient dead(fake("--exit-after 0"));
  EXPECT_SWPIPE_ERROR(dead.describe(), kAdapterFailure);
  ProtocolClient missing(open_channel("exec:/nonexistent/adapter"));
  EXPECT_SWPIPE_ERROR(missing.describe(), kAdapterFailure);
}

TEST(Remote, AcousticEncoder) {
  RemoteAcousticEncoder enc("hubert-large", fake("--kind acoustic_encoder --dim 3 --rate 8000"));
  EXPECT_EQ(enc.dim(), 3u);
  EXPECT_EQ(enc.expected_rate(), 8000);
  AudioClip clip{std::vector<float>(480, 0.25f), 8000};
  const auto m = enc.encode(clip);
  EXPECT_EQ(m.rows, 3u);
  EXPECT_EQ(m.cols, 3u);
  EXPECT_FLOAT_EQ(m.at(1, 2), 2.25f);
  EXPECT_SWPIPE_ERROR(RemoteAcousticEncoder("x", fake("--kind asr")), kAdapterFailure);
}

TEST(Remote, TextAsrLlm) {
  RemoteTextEncoder text("bert-base-chinese", fake("--kind text_encoder --dim 4"));
  EXPECT_EQ(text.encode("abc"), (std::vector<float>{3, 4, 5, 6}));

  RemoteAsr asr("whisper-large-v3", fake("--kind asr"));
  const auto t = asr.transcribe({std::vector<float>(100, 0.f), 16000});
  EXPECT_EQ(t.text, "heard 100 samples");
  EXPECT_EQ(t.language, "zh");

  RemoteLlm llm("deepseek-r1", fake("--kind llm"));
  const auto raw = llm.complete(indicators::build_prompt("I exercise at the gym."), {});
  EXPECT_NO_THROW(indicators::parse_response(raw));
}

TEST(Remote, DenoiserForwardsKey) {
  RemoteDenoiser good(fake("--kind denoiser --require-key s3cret"), "s3cret");
  const auto out = good.process({{0.5f, -0.5f}, 16000});
  EXPECT_EQ(out.samples, (std::vector<float>{0.25f, -0.25f}));
  EXPECT_NE(good.name().find("remote:"), std::string::npos);
  RemoteDenoiser bad(fake("--kind denoiser --require-key s3cret"), "wrong");
  EXPECT_SWPIPE_ERROR(bad.process({{0.5f}, 16000}), kAdapterFailure);
}

TEST(Remote, UnixSocket) {
  TempDir dir("sock");
  const auto path = (dir / "a.sock").string();
  const int srv = ::socket(AF_UNIX, SOCK_STREAM, 0);
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  std::snprintf(addr.sun_path, sizeof(addr.sun_path), "%s", path.c_str());
  ASSERT_EQ(::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  ASSERT_EQ(::listen(srv, 1), 0);
  std::thread server([srv] {
    const int c = ::accept(srv, nullptr, nullptr);
    std::string buf;
    char ch;
    while (::read(c, &ch, 1) == 1 && ch != '\n') buf += ch;
    const auto req = nlohmann::json::parse(buf);
    const nlohmann::json reply = {
        {"id", req["id"]},
        {"ok", true},
        {"result", {{"kind", "asr"}, {"id", "sock"}, {"protocol_version", kProtocolVersion}}}};
    const auto out = reply.dump() + "\n";
    (void)!::write(c, out.data(), out.size());
    ::close(c);
  });
  ProtocolClient client(open_channel("unix:" + path));
  EXPECT_EQ(client.describe().id, "sock");
  server.join();
  ::close(srv);
}

TEST(Remote, HttpLlm) {
  httplib::Server server;
  std::string seen_auth;
  nlohmann::json seen_body;
  server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"text", "Self-harm Behavior: 0\nPressure: 0\nSocial Support: 0\n"
                                            "Unhealthy Outlets: 0\nExercise: 0\n"}}
                        .dump(),
                    "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpLlm llm("deepseek-r1", base + "/complete", "k3y", 10);
  indicators::DecodingParams p;
  p.nonce = 2;
  const auto text = llm.complete("prompt text", p);
  EXPECT_NO_THROW(indicators::parse_response(text));
  EXPECT_EQ(seen_auth, "Bearer k3y");
  EXPECT_EQ(seen_body["prompt"], "prompt text");
  EXPECT_EQ(seen_body["model_id"], "deepseek-r1");
  EXPECT_EQ(seen_body["nonce"], 2);

  HttpLlm broken("deepseek-r1", base + "/broken", "", 10);
  EXPECT_SWPIPE_ERROR(broken.complete("x", {}), kAdapterFailure);
  server.stop();
  t.join();
}

}  // namespace
}  // namespace swpipe::adapters
