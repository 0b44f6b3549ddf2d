//! Byte-addressed allocations with per-byte initialization bits.
//!
//! A pointer is an allocation id and a byte offset. Stored in memory it is
//! the 64-bit word `id << 32 | offset`, so integer round trips work and the
//! null pointer is zero.

use crate::frontend::SourceSpan;
use crate::sema::SymbolId;

use super::{RuntimeErrorKind, StmtId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pointer {
    pub alloc: u32,
    pub off: i64,
}

impl Pointer {
    pub const NULL: Pointer = Pointer { alloc: 0, off: 0 };

    pub fn is_null(self) -> bool {
        self.alloc == 0 && self.off == 0
    }

    pub fn encode(self) -> u64 {
        ((self.alloc as u64) << 32) | (self.off as u32 as u64)
    }

    pub fn decode(v: u64) -> Pointer {
        Pointer { alloc: (v >> 32) as u32, off: (v & 0xffff_ffff) as i64 }
    }

    pub fn offset(self, delta: i64) -> Pointer {
        Pointer { alloc: self.alloc, off: self.off.wrapping_add(delta) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AllocKind {
    Global(SymbolId),
    Local(SymbolId),
    Temp,
    StrLit,
    Heap { site: SourceSpan, stmt: Option<StmtId> },
    Stream { name: String, site: Option<SourceSpan>, input: Vec<u8>, pos: usize, eof: bool, standard: bool },
    Function(String),
}

#[derive(Debug, Clone)]
pub struct Allocation {
    pub kind: AllocKind,
    pub bytes: Vec<u8>,
    pub init: Vec<bool>,
    pub live: bool,
    pub readonly: bool,
}

/// Why an access failed, before the interpreter attaches a location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub kind: RuntimeErrorKind,
    pub message: String,
}

impl Fault {
    pub fn new(kind: RuntimeErrorKind, message: impl Into<String>) -> Self {
        Fault { kind, message: message.into() }
    }
}

#[derive(Debug, Default)]
pub struct Memory {
    /// Index 0 is reserved for null.
    allocs: Vec<Option<Allocation>>,
}

impl Memory {
    pub fn new() -> Self {
        Memory { allocs: vec![None] }
    }

    pub fn alloc(&mut self, kind: AllocKind, size: u64, initialized: bool) -> Pointer {
        let size = size as usize;
        self.allocs.push(Some(Allocation {
            kind,
            bytes: vec![0; size],
            init: vec![initialized; size],
            live: true,
            readonly: false,
        }));
        Pointer { alloc: (self.allocs.len() - 1) as u32, off: 0 }
    }

    pub fn get(&self, p: Pointer) -> Option<&Allocation> {
        self.allocs.get(p.alloc as usize).and_then(Option::as_ref)
    }

    pub fn get_mut(&mut self, p: Pointer) -> Option<&mut Allocation> {
        self.allocs.get_mut(p.alloc as usize).and_then(Option::as_mut)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Allocation)> {
        self.allocs.iter().enumerate().filter_map(|(i, a)| a.as_ref().map(|a| (i as u32, a)))
    }

    pub fn kill(&mut self, p: Pointer) {
        if let Some(a) = self.get_mut(p) {
            a.live = false;
        }
    }

    fn check(&self, p: Pointer, len: usize, write: bool) -> Result<(), Fault> {
        if p.alloc == 0 {
            return Err(Fault::new(RuntimeErrorKind::NullDeref, "null pointer dereference"));
        }
        let Some(a) = self.get(p) else {
            return Err(Fault::new(RuntimeErrorKind::OobAccess, "access through an invalid pointer"));
        };
        if !a.live {
            let what = match a.kind {
                AllocKind::Heap { .. } => "access to freed memory",
                AllocKind::Stream { .. } => "use of a closed stream",
                _ => "access to an object whose lifetime has ended",
            };
            return Err(Fault::new(RuntimeErrorKind::UseAfterFree, what));
        }
        match a.kind {
            AllocKind::Function(_) => {
                return Err(Fault::new(RuntimeErrorKind::OobAccess, "object access through a function pointer"));
            }
            AllocKind::Stream { .. } => {
                return Err(Fault::new(RuntimeErrorKind::OobAccess, "dereference of an opaque stream pointer"));
            }
            _ => {}
        }
        if p.off < 0 || (p.off as u64).saturating_add(len as u64) > a.bytes.len() as u64 {
            return Err(Fault::new(
                RuntimeErrorKind::OobAccess,
                format!("access of {len} byte(s) at offset {} of a {}-byte object", p.off, a.bytes.len()),
            ));
        }
        if write && a.readonly {
            return Err(Fault::new(RuntimeErrorKind::OobAccess, "write to a string literal"));
        }
        Ok(())
    }

    /// Bytes and init bits, without requiring initialization.
    pub fn read_raw(&self, p: Pointer, len: usize) -> Result<(Vec<u8>, Vec<bool>), Fault> {
        self.check(p, len, false)?;
        let a = self.get(p).expect("checked");
        let o = p.off as usize;
        Ok((a.bytes[o..o + len].to_vec(), a.init[o..o + len].to_vec()))
    }

    /// Bytes that must all be initialized.
    pub fn read(&self, p: Pointer, len: usize) -> Result<Vec<u8>, Fault> {
        let (bytes, init) = self.read_raw(p, len)?;
        if init.iter().any(|i| !i) {
            return Err(Fault::new(RuntimeErrorKind::UninitializedRead, "read of an uninitialized value"));
        }
        Ok(bytes)
    }

    pub fn write(&mut self, p: Pointer, bytes: &[u8]) -> Result<(), Fault> {
        self.check(p, bytes.len(), true)?;
        let a = self.get_mut(p).expect("checked");
        let o = p.off as usize;
        a.bytes[o..o + bytes.len()].copy_from_slice(bytes);
        a.init[o..o + bytes.len()].iter_mut().for_each(|i| *i = true);
        Ok(())
    }

    pub fn write_raw(&mut self, p: Pointer, bytes: &[u8], init: &[bool]) -> Result<(), Fault> {
        self.check(p, bytes.len(), true)?;
        let a = self.get_mut(p).expect("checked");
        let o = p.off as usize;
        a.bytes[o..o + bytes.len()].copy_from_slice(bytes);
        a.init[o..o + init.len()].copy_from_slice(init);
        Ok(())
    }

    /// Bytes of a NUL-terminated string, without the terminator.
    pub fn read_cstr(&self, p: Pointer) -> Result<Vec<u8>, Fault> {
        let mut out = Vec::new();
        let mut q = p;
        loop {
            let b = self.read(q, 1)?[0];
            if b == 0 {
                return Ok(out);
            }
            out.push(b);
            q = q.offset(1);
        }
    }

    /// Number of live bytes from `p` to the end of its allocation.
    pub fn remaining(&self, p: Pointer) -> usize {
        self.get(p).map_or(0, |a| (a.bytes.len() as i64 - p.off).max(0) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_encoding_round_trips() {
        let p = Pointer { alloc: 7, off: 12 };
        assert_eq!(Pointer::decode(p.encode()), p);
        assert_eq!(Pointer::NULL.encode(), 0);
    }

    #[test]
    fn faults_by_kind() {
        let mut m = Memory::new();
        let p = m.alloc(AllocKind::Temp, 4, false);
        assert_eq!(m.read(p, 4).unwrap_err().kind, RuntimeErrorKind::UninitializedRead);
        m.write(p, &[1, 2, 3, 4]).unwrap();
        assert_eq!(m.read(p, 4).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(m.read(p.offset(2), 4).unwrap_err().kind, RuntimeErrorKind::OobAccess);
        assert_eq!(m.read(Pointer::NULL, 1).unwrap_err().kind, RuntimeErrorKind::NullDeref);
        m.kill(p);
        assert_eq!(m.read(p, 1).unwrap_err().kind, RuntimeErrorKind::UseAfterFree);
    }
}
