// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::net::Ipv6Addr;
use std::str::FromStr;

use super::RoutingError;

/// An IPv6 prefix. Bits beyond `len` are always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    addr: Ipv6Addr,
    len: u8,
}

impl Prefix {
    pub const DEFAULT: Prefix = Prefix {
        addr: Ipv6Addr::UNSPECIFIED,
        len: 0,
    };

    pub fn new(addr: Ipv6Addr, len: u8) -> Result<Self, RoutingError> {
        if len > 128 {
            return Err(RoutingError::BadPrefix(format!("{addr}/{len}")));
        }
        if u128::from(addr) & !mask(len) != 0 {
            return Err(RoutingError::BadPrefix(format!(
                "{addr}/{len} has host bits set"
            )));
        }
        Ok(Prefix { addr, len })
    }

    /// Host route for a single address.
    pub fn host(addr: Ipv6Addr) -> Self {
        Prefix { addr, len: 128 }
    }

    pub fn addr(&self) -> Ipv6Addr {
        self.addr
    }

    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_default(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, addr: Ipv6Addr) -> bool {
        u128::from(addr) & mask(self.len) == u128::from(self.addr)
    }
}

fn mask(len: u8) -> u128 {
    match len {
        0 => 0,
        l => u128::MAX << (128 - u32::from(l)),
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_default() {
            f.write_str("default")
        } else {
            write!(f, "{}/{}", self.addr, self.len)
        }
    }
}

impl FromStr for Prefix {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "default" || s == "any" {
            return Ok(Prefix::DEFAULT);
        }
        let bad = || RoutingError::BadPrefix(s.to_string());
        match s.split_once('/') {
            Some((a, l)) => Prefix::new(a.parse().map_err(|_| bad())?, l.parse().map_err(|_| bad())?),
            None => Ok(Prefix::host(s.parse().map_err(|_| bad())?)),
        }
    }
}
