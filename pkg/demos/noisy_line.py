"""Handshakes over a lossy, bit-flipping voice data channel.

Every fifth frame is lost and the largest frame is garbled one time in five.
The CRC throws garbled frames away, the timers resend, and the call either
completes with matching keys or gives up after the retry budget.
"""

from collections import Counter

from voicekex.channel import ChannelConfig
from voicekex.frames import MIN_FRAME
from voicekex.harness import ScenarioConfig, run_trial

LARGEST = 131  # bytes on the wire for the biggest identity block
ber = 1 - 0.8 ** (1 / (8 * LARGEST))
channel = ChannelConfig(drop_prob=0.2, bit_error_rate=ber, seed=3)
print(f"bit error rate {ber:.2e}, header and CRC add {MIN_FRAME} bytes per frame")

for scenario in "ac":
    cfg = ScenarioConfig(scenario, mode="concrete", channel=channel, seed=5)
    outcomes, sent = Counter(), []
    for i in range(300):
        run = run_trial(cfg, i)
        outcomes[run.record.outcomes] += 1
        sent.append(len(run.network.log))
    done = outcomes[("secured", "secured")]
    print(f"({scenario}) {done}/300 secured, {sum(sent) / len(sent):.1f} frames sent per call on average")
    for pair, n in outcomes.most_common():
        if pair != ("secured", "secured"):
            print(f"    {n:3d} x alice={pair[0]} bob={pair[1]}")
