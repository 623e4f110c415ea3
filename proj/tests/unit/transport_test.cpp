// Copyright 2026 The VFedSSD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstring>
#include <future>
#include <thread>

#include "vfedssd/common/error.hpp"
#include "vfedssd/transport/channel.hpp"
#include "vfedssd/transport/handshake.hpp"
#include "vfedssd/transport/message.hpp"

namespace vfedssd {
namespace {

Matrix sample_payload() { return Matrix::from_rows({{1.5f, -2.0f}, {0.0f, 3.25f}, {1e-30f, -7.0f}}); }

TEST(Frame, RoundTripWithPayloadAndMeta) {
  ProtocolMessage m;
  m.type = MessageType::Activation;
  m.round = 7;
  m.payload = sample_payload();
  m.meta = {{"segment", "train"}, {"batch", "12"}};
  const auto bytes = encode_frame(m);
  EXPECT_EQ(bytes.size(), kFrameHeaderSize + 6 * 4 + 4 + 4 + 4 + 5 + 4 + 2 + 4 + 7 + 4 + 5);
  const ProtocolMessage back = decode_frame(bytes);
  EXPECT_EQ(back.type, m.type);
  EXPECT_EQ(back.round, 7u);
  ASSERT_TRUE(back.payload.has_value());
  EXPECT_TRUE(bit_equal(*back.payload, *m.payload));
  EXPECT_EQ(back.meta, m.meta);
}

TEST(Frame, HeaderFields) {
  ProtocolMessage m;
  m.type = MessageType::Gradient;
  m.round = 0x0102030405060708ULL;
  m.payload = sample_payload();
  const auto bytes = encode_frame(m);
  EXPECT_EQ(std::memcmp(bytes.data(), "VFSD", 4), 0);
  const FrameHeader h = decode_header(std::span(bytes).first(kFrameHeaderSize));
  EXPECT_EQ(h.version, kProtocolVersion);
  EXPECT_EQ(h.type, MessageType::Gradient);
  EXPECT_EQ(h.round, m.round);
  EXPECT_EQ(h.rows, 3u);
  EXPECT_EQ(h.cols, 2u);
  EXPECT_EQ(h.payload_bytes(), 24u);
  // Little-endian round.
  EXPECT_EQ(static_cast<unsigned>(bytes[6]), 0x08u);
}

TEST(Frame, BadMagicAndVersionAreRejected) {
  ProtocolMessage m;
  m.type = MessageType::Control;
  m.round = 1;
  auto bytes = encode_frame(m);
  auto bad = bytes;
  bad[0] = std::byte{'X'};
  EXPECT_THROW(decode_frame(bad), ProtocolError);
  bad = bytes;
  bad[4] = std::byte{99};
  EXPECT_THROW(decode_frame(bad), ProtocolError);
  bad = bytes;
  bad[5] = std::byte{42};
  EXPECT_THROW(decode_frame(bad), ProtocolError);
}

TEST(Frame, TruncatedFrameIsRejected) {
  ProtocolMessage m;
  m.type = MessageType::Activation;
  m.round = 1;
  m.payload = sample_payload();
  auto bytes = encode_frame(m);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_frame(bytes), ProtocolError);
}

TEST(Frame, PayloadTypesNeedPayload) {
  EXPECT_TRUE(requires_payload(MessageType::Activation));
  EXPECT_TRUE(requires_payload(MessageType::Gradient));
  EXPECT_TRUE(requires_payload(MessageType::EvalActivation));
  EXPECT_FALSE(requires_payload(MessageType::Control));
}

TEST(InprocChannel, DeliversInOrderWithRounds) {
  auto [a, b] = make_inproc_pair();
  EXPECT_EQ(a->send(MessageType::Control, std::nullopt, {{"cmd", "x"}}), 1u);
  EXPECT_EQ(a->send(MessageType::Activation, sample_payload()), 2u);
  const auto m1 = b->recv();
  const auto m2 = b->recv();
  EXPECT_EQ(m1.round, 1u);
  EXPECT_EQ(m1.get("cmd"), "x");
  EXPECT_EQ(m2.round, 2u);
  EXPECT_TRUE(bit_equal(*m2.payload, sample_payload()));
}

TEST(InprocChannel, OutOfOrderRoundIsProtocolError) {
  auto [a, b] = make_inproc_pair();
  ProtocolMessage m;
  m.type = MessageType::Control;
  m.round = 5;
  a->send_raw(encode_frame(m));
  m.round = 4;
  a->send_raw(encode_frame(m));
  EXPECT_EQ(b->recv().round, 5u);
  EXPECT_THROW(b->recv(), ProtocolError);
}

TEST(InprocChannel, ExpectRejectsOtherTypes) {
  auto [a, b] = make_inproc_pair();
  a->send(MessageType::Control);
  EXPECT_THROW(b->expect(MessageType::Gradient), ProtocolError);
}

TEST(InprocChannel, RecvTimesOut) {
  auto [a, b] = make_inproc_pair();
  EXPECT_THROW(b->recv(Millis(20)), TimeoutError);
}

TEST(InprocChannel, ClosedPeerIsTransportError) {
  auto [a, b] = make_inproc_pair();
  a->close();
  EXPECT_THROW(b->recv(Millis(1000)), TransportError);
}

TEST(InprocChannel, StatsCountMessagesAndBytes) {
  auto [a, b] = make_inproc_pair();
  a->send(MessageType::Activation, sample_payload());
  a->send(MessageType::Control);
  b->recv();
  b->recv();
  const auto s = a->stats();
  EXPECT_EQ(s.messages_sent, 2u);
  EXPECT_EQ(s.sent(MessageType::Activation), 1u);
  EXPECT_EQ(s.sent(MessageType::Control), 1u);
  EXPECT_EQ(b->stats().messages_received, 2u);
  EXPECT_EQ(b->stats().bytes_received, s.bytes_sent);
}

TEST(InprocChannel, TranscriptsOfBothEndsMirror) {
  auto [a, b] = make_inproc_pair();
  a->send(MessageType::Activation, sample_payload(), {{"k", "v"}});
  b->recv();
  const auto ta = a->transcript();
  const auto tb = b->transcript();
  ASSERT_EQ(ta.size(), 1u);
  ASSERT_EQ(tb.size(), 1u);
  EXPECT_EQ(ta[0].frame_digest, tb[0].frame_digest);
  EXPECT_EQ(ta[0].rows, 3u);
  EXPECT_EQ(tb[0].direction, Direction::Received);
}

TEST(InprocChannel, TenThousandEchoes) {
  auto [a, b] = make_inproc_pair();
  std::thread echo([&b] {
    for (int i = 0; i < 10000; ++i) {
      auto m = b->recv();
      b->send(MessageType::Gradient, std::move(m.payload));
    }
  });
  for (int i = 0; i < 10000; ++i) {
    Matrix p(1, 2);
    p(0, 0) = static_cast<float>(i);
    p(0, 1) = -static_cast<float>(i);
    a->send(MessageType::Activation, p);
    const auto back = a->expect(MessageType::Gradient);
    ASSERT_EQ(back.round, static_cast<std::uint64_t>(i + 1));
    ASSERT_TRUE(bit_equal(*back.payload, p));
  }
  echo.join();
}

HandshakeInfo info() {
  HandshakeInfo h;
  h.schema_hash = 0xABCDEF;
  h.config_hash = 0x1234;
  h.d_a = 8;
  h.d_b = 8;
  h.batch_size = 256;
  h.pretrain_batch_size = 512;
  return h;
}

TEST(Handshake, MatchingInfoSucceeds) {
  auto [a, b] = make_inproc_pair();
  auto fb = std::async(std::launch::async, [&b] { return handshake(*b, Role::Passive, info()); });
  const Session sa = handshake(*a, Role::Active, info());
  const Session sb = fb.get();
  EXPECT_EQ(sa.peer, info());
  EXPECT_EQ(sb.peer, info());
  EXPECT_EQ(sb.role, Role::Passive);
}

TEST(Handshake, BatchSizeMismatchFailsOnBothSides) {
  auto [a, b] = make_inproc_pair();
  HandshakeInfo other = info();
  other.batch_size = 128;
  auto fb = std::async(std::launch::async, [&b, other] { return handshake(*b, Role::Passive, other); });
  try {
    handshake(*a, Role::Active, info());
    FAIL() << "expected HandshakeError";
  } catch (const HandshakeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("batch_size"), std::string::npos) << msg;
    EXPECT_NE(msg.find("256"), std::string::npos) << msg;
    EXPECT_NE(msg.find("128"), std::string::npos) << msg;
  }
  EXPECT_THROW(fb.get(), HandshakeError);
}

TEST(Handshake, SchemaMismatchReportsBothHashes) {
  auto [a, b] = make_inproc_pair();
  HandshakeInfo other = info();
  other.schema_hash = 0x999;
  auto fb = std::async(std::launch::async, [&b, other] { return handshake(*b, Role::Passive, other); });
  try {
    handshake(*a, Role::Active, info());
    FAIL() << "expected HandshakeError";
  } catch (const HandshakeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(hex64(0xABCDEF)), std::string::npos) << msg;
    EXPECT_NE(msg.find(hex64(0x999)), std::string::npos) << msg;
  }
  EXPECT_THROW(fb.get(), HandshakeError);
}

TEST(Tcp, LoopbackRoundTrip) {
  TcpListener listener("127.0.0.1", 0);
  ASSERT_NE(listener.port(), 0);
  auto server = std::async(std::launch::async, [&listener] {
    auto ch = listener.accept(Millis(5000));
    auto m = ch->recv();
    ch->send(MessageType::Gradient, std::move(m.payload), {{"echo", "1"}});
    ch->expect(MessageType::Bye);
  });
  auto client = tcp_connect("127.0.0.1", listener.port(), Millis(5000));
  client->send(MessageType::Activation, sample_payload());
  const auto back = client->expect(MessageType::Gradient);
  EXPECT_TRUE(bit_equal(*back.payload, sample_payload()));
  EXPECT_EQ(back.get("echo"), "1");
  client->send(MessageType::Bye);
  server.get();
}

TEST(Tcp, AcceptTimesOut) {
  TcpListener listener("127.0.0.1", 0);
  EXPECT_THROW(listener.accept(Millis(50)), TimeoutError);
}

TEST(Tcp, RecvTimesOut) {
  TcpListener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&listener] { return listener.accept(Millis(5000)); });
  auto client = tcp_connect("127.0.0.1", listener.port(), Millis(5000));
  auto peer = server.get();
  EXPECT_THROW(client->recv(Millis(50)), TimeoutError);
}

TEST(Tcp, PeerDisconnectIsTransportError) {
  TcpListener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&listener] { return listener.accept(Millis(5000)); });
  auto client = tcp_connect("127.0.0.1", listener.port(), Millis(5000));
  auto peer = server.get();
  peer->close();
  EXPECT_THROW(client->recv(Millis(2000)), TransportError);
}

}  // namespace
}  // namespace vfedssd
