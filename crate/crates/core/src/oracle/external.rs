//! Out-of-process evaluator speaking newline-delimited JSON over stdio.
//!
//! ```text
//! -> {"op":"hello"}
//! <- {"op":"hello","layers":L,"heads":N,"baseline":F}
//! -> {"op":"evaluate","id":K,"mask":[[i,j],...]}
//! <- {"op":"result","id":K,"accuracy":F}   or   {"op":"error","id":K,"message":"..."}
//! -> {"op":"bye"}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Oracle, OracleInfo};
use crate::error::{Error, Result};
use crate::heads::{Geometry, PruneMask};

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Hello,
    Evaluate { id: u64, mask: &'a PruneMask },
    Bye,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Reply {
    Hello { layers: usize, heads: usize, baseline: f64 },
    Result { id: u64, accuracy: f64 },
    Error { id: Option<u64>, message: String },
}

/// Protocol client over any line-oriented transport.
pub struct WireClient<R, W> {
    reader: R,
    writer: W,
    next_id: u64,
    line: String,
}

impl<R: BufRead, W: Write> WireClient<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        WireClient {
            reader,
            writer,
            next_id: 1,
            line: String::new(),
        }
    }

    fn send(&mut self, request: &Request<'_>) -> Result<()> {
        let mut frame = serde_json::to_vec(request)?;
        frame.push(b'\n');
        self.writer.write_all(&frame).map_err(Error::Transport)?;
        self.writer.flush().map_err(Error::Transport)
    }

    fn receive(&mut self) -> Result<Reply> {
        self.line.clear();
        let n = self.reader.read_line(&mut self.line).map_err(Error::Transport)?;
        if n == 0 {
            return Err(Error::Protocol("evaluator closed its output".into()));
        }
        serde_json::from_str(self.line.trim_end())
            .map_err(|e| Error::Protocol(format!("malformed reply {:?}: {e}", self.line.trim_end())))
    }

    /// Performs the handshake and validates the reported model description.
    pub fn handshake(&mut self) -> Result<OracleInfo> {
        self.send(&Request::Hello)?;
        match self.receive()? {
            Reply::Hello {
                layers,
                heads,
                baseline,
            } => OracleInfo::new(Geometry::new(layers, heads)?, baseline),
            Reply::Error { id, message } => Err(Error::Evaluator {
                id: id.unwrap_or(0),
                message,
            }),
            other => Err(Error::Protocol(format!("expected hello, got {other:?}"))),
        }
    }

    pub fn evaluate(&mut self, mask: &PruneMask) -> Result<f64> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Request::Evaluate { id, mask })?;
        match self.receive()? {
            Reply::Result { id: got, accuracy } if got == id => {
                if accuracy.is_finite() {
                    Ok(accuracy)
                } else {
                    Err(Error::Protocol(format!("non-finite accuracy for request {id}")))
                }
            }
            Reply::Result { id: got, .. } => Err(Error::Protocol(format!(
                "reply id {got} does not match request id {id}"
            ))),
            Reply::Error { id: got, message } => Err(Error::Evaluator {
                id: got.unwrap_or(id),
                message,
            }),
            other => Err(Error::Protocol(format!("expected result, got {other:?}"))),
        }
    }

    pub fn bye(&mut self) -> Result<()> {
        self.send(&Request::Bye)
    }

    pub fn into_parts(self) -> (R, W) {
        (self.reader, self.writer)
    }
}

/// Oracle backed by a child process. Requests are serialized through a
/// single connection.
pub struct ExternalOracle {
    info: OracleInfo,
    client: Mutex<Option<WireClient<BufReader<ChildStdout>, ChildStdin>>>,
    child: Child,
}

impl ExternalOracle {
    /// Spawns `command[0]` with the remaining arguments and performs the
    /// handshake.
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::InvalidOracle("external oracle command is empty".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(Error::Transport)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = WireClient::new(BufReader::new(stdout), stdin);
        let info = match client.handshake() {
            Ok(info) => info,
            Err(e) => {
                drop(client);
                let _ = child.kill();
                let _ = child.wait();
                return Err(e);
            }
        };
        Ok(ExternalOracle {
            info,
            client: Mutex::new(Some(client)),
            child,
        })
    }

    /// Sends the shutdown frame, closes the pipe and waits for the child.
    pub fn shutdown(mut self) -> Result<()> {
        self.close()
    }

    fn close(&mut self) -> Result<()> {
        let client = self.client.get_mut().unwrap_or_else(|e| e.into_inner()).take();
        if let Some(mut client) = client {
            let sent = client.bye();
            drop(client);
            self.child.wait().map_err(Error::Transport)?;
            sent?;
        }
        Ok(())
    }
}

impl Oracle for ExternalOracle {
    fn info(&self) -> OracleInfo {
        self.info
    }

    fn accuracy(&self, mask: &PruneMask) -> Result<f64> {
        let mut guard = self.client.lock().unwrap_or_else(|e| e.into_inner());
        let client = guard
            .as_mut()
            .ok_or_else(|| Error::Protocol("evaluator connection already closed".into()))?;
        let accuracy = client.evaluate(mask)?;
        if mask.is_empty() && accuracy != self.info.baseline_accuracy {
            return Err(Error::Protocol(format!(
                "empty-mask accuracy {accuracy} differs from handshake baseline {}",
                self.info.baseline_accuracy
            )));
        }
        Ok(accuracy)
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn client(script: &str) -> WireClient<Cursor<Vec<u8>>, Vec<u8>> {
        WireClient::new(Cursor::new(script.as_bytes().to_vec()), Vec::new())
    }

    #[test]
    fn handshake_frames_are_exact() {
        let mut c = client("{\"op\":\"hello\",\"layers\":2,\"heads\":3,\"baseline\":88.14}\n");
        let info = c.handshake().unwrap();
        assert_eq!(info.geometry, Geometry::new(2, 3).unwrap());
        assert_eq!(info.baseline_accuracy, 88.14);
        c.bye().unwrap();
        let (_, sent) = c.into_parts();
        assert_eq!(
            String::from_utf8(sent).unwrap(),
            "{\"op\":\"hello\"}\n{\"op\":\"bye\"}\n"
        );
    }

    #[test]
    fn evaluate_frames_use_canonical_masks_and_increasing_ids() {
        let g = Geometry::new(2, 3).unwrap();
        let mut c = client(concat!(
            "{\"op\":\"result\",\"id\":1,\"accuracy\":88.0}\n",
            "{\"op\":\"result\",\"id\":2,\"accuracy\":87.5}\n",
        ));
        let m = PruneMask::from_heads([(1, 2), (0, 1)], g).unwrap();
        assert_eq!(c.evaluate(&m).unwrap(), 88.0);
        assert_eq!(c.evaluate(&PruneMask::empty()).unwrap(), 87.5);
        let (_, sent) = c.into_parts();
        assert_eq!(
            String::from_utf8(sent).unwrap(),
            "{\"op\":\"evaluate\",\"id\":1,\"mask\":[[0,1],[1,2]]}\n{\"op\":\"evaluate\",\"id\":2,\"mask\":[]}\n"
        );
    }

    #[test]
    fn negative_baseline_rejected() {
        let mut c = client("{\"op\":\"hello\",\"layers\":2,\"heads\":3,\"baseline\":-1}\n");
        assert!(matches!(c.handshake(), Err(Error::InvalidOracle(_))));
    }

    #[test]
    fn zero_geometry_rejected() {
        let mut c = client("{\"op\":\"hello\",\"layers\":0,\"heads\":3,\"baseline\":50}\n");
        assert!(matches!(c.handshake(), Err(Error::InvalidGeometry { .. })));
    }

    #[test]
    fn malformed_and_mismatched_replies() {
        let mut c = client("not json\n");
        assert!(matches!(c.handshake(), Err(Error::Protocol(_))));

        let g = Geometry::new(1, 1).unwrap();
        let m = PruneMask::from_heads([(0, 0)], g).unwrap();
        let mut c = client("{\"op\":\"result\",\"id\":9,\"accuracy\":1.0}\n");
        assert!(matches!(c.evaluate(&m), Err(Error::Protocol(_))));

        let mut c = client("");
        assert!(matches!(c.evaluate(&m), Err(Error::Protocol(_))));
    }

    #[test]
    fn error_frame_carries_message() {
        let g = Geometry::new(1, 1).unwrap();
        let m = PruneMask::from_heads([(0, 0)], g).unwrap();
        let mut c = client("{\"op\":\"error\",\"id\":1,\"message\":\"CUDA out of memory\"}\n");
        match c.evaluate(&m) {
            Err(Error::Evaluator { id, message }) => {
                assert_eq!(id, 1);
                assert_eq!(message, "CUDA out of memory");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
