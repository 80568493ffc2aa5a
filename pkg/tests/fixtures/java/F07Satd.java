public class F07Satd {
    /**
     * Writes the snapshot to disk atomically and safely.
     */
    public void snapshot() {
        begin();
        // TODO: fix overflow when the buffer is large
        stage();

        // XXX legacy path retained for rollback
        commitAll();

        // flush the metadata row
        index();

        prune();
        archive();
        notifyAllWaiters();
        done();
        finishUp();
        cleanup();
    }
}
