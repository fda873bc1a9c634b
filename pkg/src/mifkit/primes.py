"""Small prime utilities (deterministic Miller-Rabin, exact below 3.3e24)."""

_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in _BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(n, 2)
    while not is_prime(n):
        n += 1
    return n


def primes_between(lo: int, hi: int):
    """Primes p with lo <= p <= hi, increasing."""
    return [p for p in range(max(lo, 2), hi + 1) if is_prime(p)]


def parse_prime_range(text: str):
    """``"5:31"`` -> primes in [5, 31]; ``"5,7,11"`` -> that list."""
    if ":" in text:
        lo, hi = text.split(":")
        return primes_between(int(lo), int(hi))
    out = [int(v) for v in text.split(",") if v.strip()]
    bad = [p for p in out if not is_prime(p)]
    if bad:
        raise ValueError(f"not prime: {bad}")
    return out
