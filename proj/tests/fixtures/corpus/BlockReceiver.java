package dfs;

import java.io.IOException;
import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

public class BlockReceiver {
  private static final Logger LOG = LoggerFactory.getLogger(BlockReceiver.class);
  private BlockManager blocks;
  private PacketResponder responder;
  private EditLog editLog;

  public void receiveBlock(String blockId, int size) {
    try {
      LOG.info("Receiving block {} of size {}", blockId, size);
      blocks.addBlock(blockId, size);
      responder.terminate(false);
    } catch (IOException e) {
      LOG.error("IOError while receiving block {}", blockId);
      abortReceive(blockId);
    }
  }

  private void abortReceive(String blockId) {
    LOG.warn("receive aborted for block {}", blockId);
    editLog.append("abort");
  }
}
