/// A propositional state as a fixed-width bitset over the atom index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    words: Box<[u64]>,
}

impl State {
    pub fn empty(num_atoms: usize) -> Self {
        State { words: vec![0; num_atoms.div_ceil(64).max(1)].into_boxed_slice() }
    }

    pub fn from_atoms(num_atoms: usize, atoms: impl IntoIterator<Item = usize>) -> Self {
        let mut s = State::empty(num_atoms);
        for a in atoms {
            s.insert(a);
        }
        s
    }

    #[inline]
    pub fn contains(&self, atom: usize) -> bool {
        self.words[atom / 64] & (1 << (atom % 64)) != 0
    }

    #[inline]
    pub fn insert(&mut self, atom: usize) {
        self.words[atom / 64] |= 1 << (atom % 64);
    }

    #[inline]
    pub fn remove(&mut self, atom: usize) {
        self.words[atom / 64] &= !(1 << (atom % 64));
    }

    pub fn contains_all(&self, atoms: &[usize]) -> bool {
        atoms.iter().all(|&a| self.contains(a))
    }

    pub fn contains_none(&self, atoms: &[usize]) -> bool {
        atoms.iter().all(|&a| !self.contains(a))
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of true atoms in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}
