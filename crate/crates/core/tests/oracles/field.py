"""Term-by-term 50-digit evaluation of the 7-mode field built from the first
solution column of the shipped solution table (frequencies then phases)."""
import mpmath as mp

mp.mp.dps = 50
x1 = ["1.7384", "1.0448", "1.3715", "1.3669", "1.5256", "0.7038", "3.2220",
      "2.4826", "1.9833", "0.2558", "6.1403", "5.5389", "1.6142", "4.9542"]
w = [mp.mpf(v) for v in x1[:7]]
ph = [mp.mpf(v) for v in x1[7:]]
A = mp.mpf("0.15")
t = mp.mpf(1)
print("eps(1.0):", mp.nstr(sum(A * mp.cos(wk * t + pk) for wk, pk in zip(w, ph)), 30))
