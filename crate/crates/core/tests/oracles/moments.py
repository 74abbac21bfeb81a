"""Independent quadrature oracle for gaussian raw moments (50 digits)."""
import mpmath as mp

mp.mp.dps = 50


def gaussian_raw_moment(mean, sigma, k):
    pdf = lambda x: mp.exp(-((x - mean) ** 2) / (2 * sigma**2)) / mp.sqrt(2 * mp.pi * sigma**2)
    lo, hi = mean - 40 * sigma, mean + 40 * sigma
    pts = [lo + (hi - lo) * i / 16 for i in range(17)]
    return mp.quad(lambda x: x**k * pdf(x), pts)


if __name__ == "__main__":
    print("E[X^6], N(1, 0.1):", mp.nstr(gaussian_raw_moment(mp.mpf(1), mp.mpf("0.1"), 6), 30))
