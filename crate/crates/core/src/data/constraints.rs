use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Pairwise side information over `n` samples.
///
/// Pairs are stored 0-based as `(i, j)` with `i < j`, sorted and free of
/// duplicates. The constraint file format uses 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    n: usize,
    must_links: Vec<(usize, usize)>,
    cannot_links: Vec<(usize, usize)>,
}

fn canonical(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl ConstraintSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            must_links: Vec::new(),
            cannot_links: Vec::new(),
        }
    }

    /// Builds a validated constraint set from 0-based pairs in any order.
    pub fn new(
        n: usize,
        must_links: impl IntoIterator<Item = (usize, usize)>,
        cannot_links: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let collect = |pairs: &mut dyn Iterator<Item = (usize, usize)>| -> Result<BTreeSet<(usize, usize)>> {
            let mut out = BTreeSet::new();
            for (i, j) in pairs {
                for index in [i, j] {
                    if index >= n {
                        return Err(Error::IndexOutOfRange {
                            line: None,
                            index: index + 1,
                            n,
                        });
                    }
                }
                if i == j {
                    return Err(Error::SelfLink {
                        line: None,
                        index: i + 1,
                    });
                }
                out.insert(canonical(i, j));
            }
            Ok(out)
        };
        let must = collect(&mut must_links.into_iter())?;
        let cannot = collect(&mut cannot_links.into_iter())?;
        if let Some(&(i, j)) = must.intersection(&cannot).next() {
            return Err(Error::ConflictingLink { i: i + 1, j: j + 1 });
        }
        Ok(Self {
            n,
            must_links: must.into_iter().collect(),
            cannot_links: cannot.into_iter().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn must_links(&self) -> &[(usize, usize)] {
        &self.must_links
    }

    pub fn cannot_links(&self) -> &[(usize, usize)] {
        &self.cannot_links
    }

    pub fn len(&self) -> usize {
        self.must_links.len() + self.cannot_links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dense must-link matrix with a unit diagonal.
    pub fn must_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for &(i, j) in &self.must_links {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }

    /// Dense cannot-link matrix with a zero diagonal.
    pub fn cannot_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.cannot_links {
            c[(i, j)] = 1.0;
            c[(j, i)] = 1.0;
        }
        c
    }

    /// Parses the text format: one `i j +1` (must) or `i j -1` (cannot) per
    /// line, 1-based indices, `#` starts a comment.
    pub fn read<R: BufRead>(n: usize, reader: R) -> Result<Self> {
        let mut must = BTreeSet::new();
        let mut cannot = BTreeSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let body = line.split('#').next().unwrap_or_default().trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected 'i j +1|-1', found {} fields", fields.len()),
                });
            }
            let index = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("'{s}' is not a sample index"),
                })?;
                if v == 0 || v > n {
                    return Err(Error::IndexOutOfRange {
                        line: Some(lineno),
                        index: v,
                        n,
                    });
                }
                Ok(v - 1)
            };
            let (i, j) = (index(fields[0])?, index(fields[1])?);
            if i == j {
                return Err(Error::SelfLink {
                    line: Some(lineno),
                    index: i + 1,
                });
            }
            let pair = canonical(i, j);
            match fields[2] {
                "+1" | "1" => must.insert(pair),
                "-1" => cannot.insert(pair),
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("link type must be +1 or -1, found '{other}'"),
                    })
                }
            };
        }
        if let Some(&(i, j)) = must.intersection(&cannot).next() {
            return Err(Error::ConflictingLink { i: i + 1, j: j + 1 });
        }
        Ok(Self {
            n,
            must_links: must.into_iter().collect(),
            cannot_links: cannot.into_iter().collect(),
        })
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# {} must-links (+1), {} cannot-links (-1); 1-based indices over n={}",
            self.must_links.len(),
            self.cannot_links.len(),
            self.n
        )?;
        for &(i, j) in &self.must_links {
            writeln!(out, "{} {} +1", i + 1, j + 1)?;
        }
        for &(i, j) in &self.cannot_links {
            writeln!(out, "{} {} -1", i + 1, j + 1)?;
        }
        Ok(())
    }
}

/// Maps a linear index over the `n(n-1)/2` unordered pairs to `(i, j)`, `i < j`.
fn pair_from_index(mut p: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if p < row {
            return (i, i + 1 + p);
        }
        p -= row;
        i += 1;
    }
}

/// Samples `n_links` distinct pairs uniformly without replacement and files
/// each as a must-link or cannot-link according to `labels`.
pub fn sample_constraints(labels: &[usize], n_links: usize, seed: u64) -> Result<ConstraintSet> {
    let n = labels.len();
    let available = n * n.saturating_sub(1) / 2;
    if n_links > available {
        return Err(Error::TooManyLinks {
            requested: n_links,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut must = Vec::new();
    let mut cannot = Vec::new();
    for p in rand::seq::index::sample(&mut rng, available, n_links) {
        let (i, j) = pair_from_index(p, n);
        if labels[i] == labels[j] {
            must.push((i, j));
        } else {
            cannot.push((i, j));
        }
    }
    ConstraintSet::new(n, must, cannot)
}
