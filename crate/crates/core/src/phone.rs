//! The ARPAbet phone inventory plus a single silence symbol.
//!
//! Vowels may carry a lexical stress digit (`AE1`); consonants never do.
//! Every phone belongs to exactly one [`PhoneClass`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Symbol used for pauses, rests and inter-word gaps.
pub const SILENCE: &str = "SIL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown phone symbol {0:?}")]
pub struct PhoneError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhoneClass {
    Vowel,
    /// Plosives and affricates.
    Plosive,
    Fricative,
    /// Nasals, liquids and glides.
    Sonorant,
    Silence,
}

impl PhoneClass {
    pub fn is_consonant(self) -> bool {
        matches!(self, Self::Plosive | Self::Fricative | Self::Sonorant)
    }
}

macro_rules! bases {
    ($($name:ident => $class:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Base {
            $($name,)*
        }

        impl Base {
            pub const ALL: &'static [Base] = &[$(Base::$name,)*];

            pub fn symbol(self) -> &'static str {
                match self {
                    $(Base::$name => stringify!($name),)*
                }
            }

            pub fn class(self) -> PhoneClass {
                match self {
                    $(Base::$name => PhoneClass::$class,)*
                }
            }

            fn from_symbol(s: &str) -> Option<Base> {
                match s {
                    $(stringify!($name) => Some(Base::$name),)*
                    _ => None,
                }
            }
        }
    };
}

bases! {
    AA => Vowel, AE => Vowel, AH => Vowel, AO => Vowel, AW => Vowel,
    AY => Vowel, EH => Vowel, ER => Vowel, EY => Vowel, IH => Vowel,
    IY => Vowel, OW => Vowel, OY => Vowel, UH => Vowel, UW => Vowel,
    B => Plosive, D => Plosive, G => Plosive, P => Plosive, T => Plosive,
    K => Plosive, CH => Plosive, JH => Plosive,
    F => Fricative, V => Fricative, TH => Fricative, DH => Fricative,
    S => Fricative, Z => Fricative, SH => Fricative, ZH => Fricative,
    HH => Fricative,
    M => Sonorant, N => Sonorant, NG => Sonorant, L => Sonorant,
    R => Sonorant, W => Sonorant, Y => Sonorant,
    SIL => Silence,
}

/// One inventory symbol, e.g. `AE1`, `B` or `SIL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phone {
    base: Base,
    stress: Option<u8>,
}

impl Phone {
    pub const SIL: Phone = Phone {
        base: Base::SIL,
        stress: None,
    };

    pub fn new(base: Base, stress: Option<u8>) -> Result<Self, PhoneError> {
        let phone = Self { base, stress };
        match stress {
            Some(s) if base.class() != PhoneClass::Vowel || s > 2 => Err(PhoneError(phone.to_string())),
            _ => Ok(phone),
        }
    }

    pub fn base(self) -> Base {
        self.base
    }

    pub fn stress(self) -> Option<u8> {
        self.stress
    }

    pub fn class(self) -> PhoneClass {
        self.base.class()
    }

    pub fn is_vowel(self) -> bool {
        self.class() == PhoneClass::Vowel
    }

    pub fn is_silence(self) -> bool {
        self.base == Base::SIL
    }

    /// Same phone ignoring stress.
    pub fn same_base(self, other: Phone) -> bool {
        self.base == other.base
    }

    /// Every symbol of the inventory: bare bases, plus each vowel with stress 0, 1 and 2.
    pub fn inventory() -> impl Iterator<Item = Phone> {
        Base::ALL.iter().flat_map(|&base| {
            let stresses: &[Option<u8>] = if base.class() == PhoneClass::Vowel {
                &[None, Some(0), Some(1), Some(2)]
            } else {
                &[None]
            };
            stresses.iter().map(move |&stress| Phone { base, stress })
        })
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.base.symbol())?;
        if let Some(s) = self.stress {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Phone {
    type Err = PhoneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PhoneError(s.to_string());
        let (head, stress) = match s.as_bytes().last() {
            Some(d @ b'0'..=b'9') => (&s[..s.len() - 1], Some(d - b'0')),
            _ => (s, None),
        };
        let base = Base::from_symbol(head).ok_or_else(err)?;
        Phone::new(base, stress).map_err(|_| err())
    }
}
