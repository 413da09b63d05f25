"""Jensen-Shannon divergence from first principles (base-2 KL)."""
import math


def kl(p, q):
    return sum(pi * math.log2(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def jsd(p, q):
    m = [(a + b) / 2 for a, b in zip(p, q)]
    return (kl(p, m) + kl(q, m)) / 2


if __name__ == "__main__":
    print(f"{jsd([0.5, 0.5], [1.0, 0.0]):.10f}")
    print(f"{jsd([0.2, 0.3, 0.5], [0.6, 0.3, 0.1]):.10f}")
    print(f"{jsd([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]):.10f}")
