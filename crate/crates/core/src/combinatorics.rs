//! Exhaustive subset enumeration helpers.

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic enumeration of the `k`-subsets of `[0, n)`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, current: (0..k).collect(), done: k > n }
    }

    /// Subsets whose first element equals `first`.
    pub fn starting_with(n: usize, k: usize, first: usize) -> impl Iterator<Item = Vec<usize>> {
        let tail = if k == 0 { Self { n: 0, current: vec![], done: true } } else { Self::new(n.saturating_sub(first + 1), k - 1) };
        let empty_head = k == 0;
        tail.filter(move |_| !empty_head)
            .map(move |t| std::iter::once(first).chain(t.into_iter().map(|i| i + first + 1)).collect())
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in (i + 1)..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(64, 2), 2016);
        assert_eq!(binomial(20, 2), 190);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(1849, 3), 1849 * 1848 * 1847 / 6);
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let all: Vec<_> = Combinations::new(5, 3).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[1], vec![0, 1, 3]);
        assert_eq!(all[9], vec![2, 3, 4]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Combinations::new(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn split_by_first_element_covers_everything() {
        let joined: Vec<_> = (0..6).flat_map(|f| Combinations::starting_with(6, 3, f)).collect();
        let direct: Vec<_> = Combinations::new(6, 3).collect();
        assert_eq!(joined, direct);
    }
}
